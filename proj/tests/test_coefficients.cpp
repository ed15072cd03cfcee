#include <doctest.h>

#include <cmath>

#include "vndiff/coefficients.hpp"
#include "vndiff/errors.hpp"
#include "vndiff/models.hpp"
#include "vndiff/rng.hpp"

using namespace vndiff;

namespace {

// Independent assembly of the AR(1) second-order coefficient from the
// displayed polynomial form: delta^2 (p2/2 - p1 p3/(3 p2) - delta (p2/6)(p3/p2)'),
// with the ratio derivative from explicit polynomial derivatives.
double ar1_v2_poly_form(const AR1Params& p, double x) {
  const Poly p1 = ar1_moment_poly(p, 1), p2 = ar1_moment_poly(p, 2), p3 = ar1_moment_poly(p, 3);
  const Poly p2d = p2.deriv(), p3d = p3.deriv();
  const double ratio_d = (p3d(x) * p2(x) - p3(x) * p2d(x)) / (p2(x) * p2(x));
  return p.alpha * (p2(x) / 2.0 - p1(x) * p3(x) / (3.0 * p2(x)) -
                    p.delta() * (p2(x) / 6.0) * ratio_d);
}

// AR(1) p3bar and p2low values (for the finite-difference route of v3).
struct Ar1Blocks {
  Poly p1, p2, p3, p4;
  double delta;
  explicit Ar1Blocks(const AR1Params& p)
      : p1(ar1_moment_poly(p, 1)),
        p2(ar1_moment_poly(p, 2)),
        p3(ar1_moment_poly(p, 3)),
        p4(ar1_moment_poly(p, 4)),
        delta(p.delta()) {}
  double p3bar(double x) const {
    const Jet2 r = p4.jet(x) / p2.jet(x);
    return (p3(x) - p1(x) * p4(x) / (2.0 * p2(x)) - 0.25 * delta * p2(x) * r.d1) / 6.0;
  }
  double p2low(double x) const {
    const Jet2 r = p3.jet(x) / p2.jet(x);
    return p2(x) / 2.0 - p1(x) * p3(x) / (3.0 * p2(x)) - delta * (p2(x) / 6.0) * r.d1;
  }
};

}  // namespace

TEST_CASE("v0 builders") {
  SUBCASE("erlangc v0 equals mu") {
    for (auto [lam, mu, n] : {std::tuple{9.0, 1.0, 10}, {25.0, 2.0, 16}, {0.5, 1.0, 1}}) {
      ErlangCParams p{lam, mu, n};
      auto m = make_erlangc_model(p);
      CHECK(build_v0(*m)(0.0) == doctest::Approx(mu).epsilon(1e-11));
    }
  }
  SUBCASE("hospital v0 closed form at N=16, beta=1") {
    auto m = make_hospital_model({16, 1.0});
    CHECK(build_v0(*m)(1.0) == doctest::Approx(0.1640625).epsilon(1e-12));
  }
  SUBCASE("ar1 v0 from bisection matches the closed form") {
    for (double alpha : {0.64, 0.16, 0.04}) {
      AR1Params p{alpha};
      auto m = make_ar1_model(p);
      const double x0 = find_drift_zero(*m);
      CHECK(x0 == doctest::Approx(std::sqrt(alpha)).epsilon(1e-10));
      const double closed = 0.5 * m->moment(2, std::sqrt(alpha));
      CHECK(build_v0(*m)(0.0) == doctest::Approx(closed).epsilon(1e-10));
    }
  }
}

TEST_CASE("v1 builders") {
  ErlangCParams p{9.0, 1.0, 10};
  auto m = make_erlangc_model(p);
  auto v1 = build_v1(*m);
  CHECK(v1(0.0) == doctest::Approx(p.mu).epsilon(1e-12));
  CHECK(v1(-std::sqrt(p.R())) == doctest::Approx(p.mu / 2.0).epsilon(1e-12));

  auto mh = make_hospital_model({16, 1.0});
  CHECK(build_v1(*mh)(-1.0) == doctest::Approx(build_v0(*mh)(0.0)).epsilon(1e-13));
}

TEST_CASE("v2 lower: dual code paths agree") {
  SUBCASE("generic jets vs the displayed polynomial form (ar1)") {
    AR1Params p{0.04};
    auto m = make_ar1_model(p);
    auto raw = build_v2_lower_raw(*m);
    for (double x : {-3.0, -1.0, 0.0, 1.0, 2.5, 7.0})
      CHECK(raw(x) == doctest::Approx(ar1_v2_poly_form(p, x)).epsilon(1e-10));
  }
  SUBCASE("floor returns exactly eta") {
    AR1Params p{0.16};
    auto m = make_ar1_model(p);
    const double eta = default_eta(*m);
    auto v2 = build_v2_lower(*m, eta);
    const double near_edge = -1.0 / p.delta() + 1e-7;
    CHECK(v2(near_edge) == eta);
  }
  SUBCASE("hospital: analytic vs finite-difference derivative route") {
    HospitalParams hp{64, 1.0};
    auto m = make_hospital_model(hp);
    const double eta = default_eta(*m);
    auto a = build_v2_lower(*m, eta);
    auto fd = build_v2_lower_fd(*m, eta);
    for (double x : {-hp.beta, -2.0, 0.5, 3.0}) {
      CHECK(a(x) == doctest::Approx(fd(x)).epsilon(1e-6));
    }
  }
  SUBCASE("erlangc has no third moment: unsupported") {
    ErlangCParams p{9.0, 1.0, 10};
    auto m = make_erlangc_model(p);
    CHECK_THROWS_AS(build_v2_lower(*m, 1e-3), UnsupportedError);
    CHECK_THROWS_AS(build_v2_upper(*m, 1e-3), UnsupportedError);
  }
  SUBCASE("eta must be positive") {
    auto m = make_ar1_model(AR1Params{0.16});
    CHECK_THROWS_AS(build_v2_lower(*m, 0.0), EtaNonPositiveError);
    CHECK_THROWS_AS(build_v2_lower(*m, -1.0), EtaNonPositiveError);
  }
}

TEST_CASE("v2 upper") {
  SUBCASE("constant c/a collapses v2 upper onto v2 lower") {
    // b = -x, a = 2, c = 0.5, d = 0: (c/a)'' = 0.
    std::vector<Poly> ms = {Poly({0.0, -1.0}), Poly({2.0}), Poly({0.5}), Poly()};
    PolynomialModel m(ms, {-kInf, kInf});
    auto lo = build_v2_lower_raw(m);
    auto up = build_v2_upper_raw(m);
    for (double x : {-2.0, 0.0, 1.0, 4.0}) CHECK(up(x) == doctest::Approx(lo(x)).epsilon(1e-14));
  }
  SUBCASE("difference scales as delta^4 across the alpha sweep") {
    for (double alpha : {0.32, 0.16, 0.08, 0.04}) {
      AR1Params p{alpha};
      auto m = make_ar1_model(p);
      auto lo = build_v2_lower_raw(*m);
      auto up = build_v2_upper_raw(*m);
      const double d4 = alpha * alpha;
      double maxdiff = 0.0;
      const double L = -1.0 / p.delta() + 1e-6;
      for (int i = 0; i < 50; ++i) {
        const double x = L + (10.0 - L) * i / 49.0;
        maxdiff = std::max(maxdiff, std::abs(up(x) - lo(x)));
      }
      CHECK(maxdiff / d4 < 1.0);
      CHECK(maxdiff > 0.0);
    }
  }
}

TEST_CASE("hospital v3 closed form") {
  HospitalParams p{64, 1.0};
  auto v3 = build_v3_hospital(p);
  const double delta = p.delta();
  // delta - (delta^2/2)(1+beta) right of zero (floor inactive).
  CHECK(v3(0.0) == doctest::Approx(0.109375).epsilon(1e-14));
  CHECK(v3(5.0) == doctest::Approx(0.109375).epsilon(1e-14));
  // Indicator step at 0: v3(0-) - v3(0+) = delta^2/2.
  CHECK(v3(-1e-13) - v3(1e-13) == doctest::Approx(delta * delta / 2.0).epsilon(1e-9));
  // Floor active at the left support edge.
  const double edge = -delta * p.N;
  CHECK(v3(edge) == doctest::Approx(delta / 2.0).epsilon(1e-14));
  // Floor becomes active exactly at -(sqrt(N)-beta).
  const double xf = -(std::sqrt(double(p.N)) - p.beta);
  CHECK(v3(xf - 1e-6) == doctest::Approx(delta / 2.0).epsilon(1e-12));
  CHECK(v3(xf + 1e-3) > delta / 2.0);
}

TEST_CASE("ar1 v3") {
  SUBCASE("nonnegative over the plot window at alpha = 0.001") {
    AR1Params p{0.001};
    auto raw = build_v3_ar1_raw(p);
    for (int i = 0; i <= 500; ++i) {
      const double x = -5.0 + 15.0 * i / 500.0;
      CHECK(raw(x) >= 0.0);
    }
  }
  SUBCASE("negative in the right tail at alpha = 0.9") {
    AR1Params p{0.9};
    auto raw = build_v3_ar1_raw(p);
    bool negative = false;
    for (double x = 5.0; x <= 40.0; x += 0.5) negative = negative || raw(x) < 0.0;
    CHECK(negative);
  }
  SUBCASE("quotient-rule derivative vs finite difference") {
    AR1Params p{0.16};
    Ar1Blocks blocks(p);
    auto raw = build_v3_ar1_raw(p);
    Rng rng(17);
    const Poly p1 = ar1_moment_poly(p, 1), p2 = ar1_moment_poly(p, 2);
    for (int t = 0; t < 20; ++t) {
      const double x = -2.0 + 10.0 * rng.uniform();
      const double h = 1e-6 * (1.0 + std::abs(x));
      auto ratio = [&](double t2) { return blocks.p3bar(t2) / blocks.p2low(t2); };
      const double rd = (ratio(x + h) - ratio(x - h)) / (2.0 * h);
      const double fd_v3 =
          p.alpha * (p2(x) / 2.0 - p1(x) * blocks.p3bar(x) / blocks.p2low(x) -
                     p.delta() * blocks.p2low(x) * rd);
      CHECK(raw(x) == doctest::Approx(fd_v3).epsilon(1e-6));
    }
  }
}

TEST_CASE("hybrid switch point") {
  SUBCASE("identical inputs give +inf") {
    AR1Params p{0.16};
    auto m = make_ar1_model(p);
    auto v2 = build_v2_lower_raw(*m);
    CHECK(find_hybrid_K(v2, v2, -2.0, 10.0) == kInf);
  }
  SUBCASE("alpha = 0.9: finite K with v3 below v2 beyond it") {
    AR1Params p{0.9};
    auto m = make_ar1_model(p);
    auto v2 = build_v2_lower_raw(*m);
    auto v3 = build_v3_ar1_raw(p);
    const double L = -1.0 / p.delta() + 1e-9;
    const double K = find_hybrid_K(v3, v2, L, 60.0);
    REQUIRE(std::isfinite(K));
    CHECK(std::abs(v3(K) - v2(K)) < 1e-6);
    for (double x = K + 0.05; x <= 60.0; x += 0.37) CHECK(v3(x) < v2(x));

    SUBCASE("hybrid equals the pieces and is continuous at K") {
      const double eta = default_eta(*m);
      auto hyb = build_hybrid(v3, v2, K, eta);
      CHECK(hyb.K == K);
      for (double x = L; x < K; x += 0.77)
        CHECK(hyb(x) == doctest::Approx(std::max(v3(x), eta)).epsilon(1e-14));
      for (double x = K + 1e-3; x < 50.0; x += 0.77)
        CHECK(hyb(x) == doctest::Approx(std::max(v2(x), eta)).epsilon(1e-14));
      CHECK(std::abs(hyb(K - 1e-9) - hyb(K + 1e-9)) < 1e-8);
    }
  }
  SUBCASE("alpha = 0.001 window [-5, 10] agrees with an independent dense scan") {
    AR1Params p{0.001};
    auto m = make_ar1_model(p);
    auto v2 = build_v2_lower_raw(*m);
    auto v3 = build_v3_ar1_raw(p);
    const double K = find_hybrid_K(v3, v2, -5.0, 10.0);
    double rightmost = kInf;
    double prev = v3(-5.0) - v2(-5.0);
    double prev_x = -5.0;
    for (int i = 1; i <= 100'000; ++i) {
      const double x = -5.0 + 15.0 * i / 100'000.0;
      const double g = v3(x) - v2(x);
      if (std::isfinite(prev) && std::isfinite(g) && prev * g <= 0.0 && (prev != 0.0 || g != 0.0))
        rightmost = 0.5 * (prev_x + x);
      prev = g;
      prev_x = x;
    }
    if (std::isfinite(rightmost))
      CHECK(K == doctest::Approx(rightmost).epsilon(1e-3));
    else
      CHECK(K == kInf);
  }
}

TEST_CASE("generic third-order recursion matches the ar1 polynomial route") {
  Rng rng(23);
  for (double alpha : {0.64, 0.32, 0.16, 0.08, 0.04}) {
    AR1Params p{alpha};
    auto m = make_ar1_model(p);
    auto gen = build_v3_generic_raw(*m);
    auto ar = build_v3_ar1_raw(p);
    for (int t = 0; t < 10; ++t) {
      const double x = -1.0 + 8.0 * rng.uniform();
      CHECK(gen(x) == doctest::Approx(ar(x)).epsilon(1e-9));
    }
  }
}

TEST_CASE("synthetic reduction: constant moments collapse v2 and v3 to a/2") {
  // b linear, a constant, c = d = 0.
  std::vector<Poly> ms = {Poly({0.0, -1.0}), Poly({2.0}), Poly(), Poly()};
  PolynomialModel m(ms, {-kInf, kInf});
  auto v2 = build_v2_lower_raw(m);
  auto v3 = build_v3_generic_raw(m);
  for (double x : {-3.0, -1.0, 0.0, 0.5, 2.0}) {
    CHECK(v2(x) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(v3(x) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("built coefficients stay positive on a support grid") {
  AR1Params pa{0.9};
  auto ma = make_ar1_model(pa);
  const double eta = default_eta(*ma);
  auto v2 = build_v2_lower(*ma, eta);
  auto v3 = build_v3_ar1(pa, eta);
  const double L = -1.0 / pa.delta() + 1e-12;
  for (int i = 0; i <= 10'000; ++i) {
    const double x = L + (50.0 - L) * i / 10'000.0;
    CHECK(v2(x) >= eta);
    CHECK(v3(x) >= eta);
  }
  HospitalParams ph{64, 1.0};
  auto v3h = build_v3_hospital(ph);
  for (int i = 0; i <= 10'000; ++i) {
    const double x = -8.0 + 28.0 * i / 10'000.0;
    CHECK(v3h(x) >= ph.delta() / 2.0);
  }
}

TEST_CASE("default eta rule") {
  auto m = make_ar1_model(AR1Params{0.16});
  CHECK(default_eta(*m) == doctest::Approx(1e-3 * build_v0(*m)(0.0)).epsilon(1e-12));
}
