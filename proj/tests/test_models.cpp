#include <doctest.h>

#include <cmath>

#include "vndiff/errors.hpp"
#include "vndiff/models.hpp"
#include "vndiff/rng.hpp"

using namespace vndiff;

namespace {

// Monte Carlo oracle for the hospital one-step jump moments at a fixed
// state: A ~ Poisson(Lambda), D ~ Binomial(m, mu), Delta = delta*(A - D).
struct McMoment {
  double mean = 0.0;
  double se = 0.0;
};

McMoment hospital_mc_moment(const HospitalParams& p, int k, double x, std::int64_t n,
                            std::uint64_t seed) {
  Rng rng(seed);
  const double delta = p.delta();
  const int m = static_cast<int>(std::min(std::max(x / delta + p.N, 0.0), double(p.N)));
  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const int a = rng.poisson(p.Lambda());
    const int d = rng.binomial(m, p.mu());
    double val = 1.0;
    const double jump = delta * (a - d);
    for (int j = 0; j < k; ++j) val *= jump;
    sum += val;
    sumsq += val * val;
  }
  McMoment r;
  r.mean = sum / n;
  r.se = std::sqrt((sumsq / n - r.mean * r.mean) / n);
  return r;
}

McMoment ar1_mc_moment(const AR1Params& p, int k, double x, std::int64_t n, std::uint64_t seed) {
  Rng rng(seed);
  const double delta = p.delta();
  const double d_state = x / delta + p.R();
  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double z = rng.exponential();
    const double xx = rng.exponential();
    const double jump = delta * (d_state * (std::exp(-p.alpha * z) - 1.0) + xx);
    double val = 1.0;
    for (int j = 0; j < k; ++j) val *= jump;
    sum += val;
    sumsq += val * val;
  }
  McMoment r;
  r.mean = sum / n;
  r.se = std::sqrt((sumsq / n - r.mean * r.mean) / n);
  return r;
}

}  // namespace

TEST_CASE("erlangc jump moments") {
  ErlangCParams p{9.0, 1.0, 10};
  auto m = make_erlangc_model(p);
  const double beta = p.beta();
  CHECK(beta == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  CHECK(m->moment(1, 0.0) == 0.0);
  CHECK(m->moment(2, 0.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(m->moment(1, 2.0 * beta) == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));

  // b is Lipschitz with constant mu; a(x) >= a(-sqrt(R)) = mu.
  const double sqrtR = std::sqrt(p.R());
  double prev_x = -sqrtR - 3.0, prev_b = m->moment(1, prev_x);
  for (int i = 1; i <= 400; ++i) {
    const double x = prev_x + 0.05;
    const double b = m->moment(1, x);
    CHECK(std::abs(b - prev_b) <= p.mu * 0.05 + 1e-12);
    CHECK(m->moment(2, x) >= p.mu - 1e-12);
    CHECK(m->moment(2, x) > 0.0);
    prev_x = x;
    prev_b = b;
  }
  CHECK_THROWS_AS(m->moment(3, 0.0), UnsupportedError);
}

TEST_CASE("erlangc reference pmf") {
  SUBCASE("M/M/1 geometric") {
    ErlangCParams p{0.5, 1.0, 1};
    auto ref = erlangc_reference(p);
    const auto& probs = ref.probs();
    CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-12));
    for (std::size_t k = 0; k + 1 < std::min<std::size_t>(probs.size(), 30); ++k)
      CHECK(probs[k + 1] / probs[k] == doctest::Approx(0.5).epsilon(1e-10));
  }

  SUBCASE("delay probability matches the classical formula") {
    ErlangCParams p{9.0, 1.0, 10};
    auto ref = erlangc_reference(p);
    const double delay = erlang_c_delay_probability(p.R(), p.n);
    CHECK(ref.ccdf(p.beta()) == doctest::Approx(delay).epsilon(1e-10));
  }

  SUBCASE("normalization, flow balance, stationarity identity") {
    ErlangCParams p{9.0, 1.0, 10};
    auto ref = erlangc_reference(p);
    CHECK(ref.total() == doctest::Approx(1.0).epsilon(1e-12));
    const auto& probs = ref.probs();
    for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
      const double lhs = p.lambda * probs[k];
      const double rhs = p.mu * std::min<int>(static_cast<int>(k) + 1, p.n) * probs[k + 1];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
    auto model = make_erlangc_model(p);
    const double ebw = ref.mean_of([&](double x) { return model->drift(x); });
    CHECK(std::abs(ebw) < 1e-8);
  }

  SUBCASE("log-space recursion survives R = 1e4") {
    ErlangCParams p{10000.0, 1.0, 10100};
    auto ref = erlangc_reference(p);
    CHECK(ref.total() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ref.mean()) < 1.0);
  }

  SUBCASE("unstable parameters rejected") {
    ErlangCParams p{2.0, 1.0, 1};
    CHECK_THROWS_AS(erlangc_reference(p), UnstableError);
  }
}

TEST_CASE("hospital jump moments against cumulants and Monte Carlo") {
  HospitalParams p{16, 1.0};
  auto m = make_hospital_model(p);
  const double delta = p.delta();

  // Drift vanishes at -beta, and matches delta*(x^- - beta).
  CHECK(m->moment(1, -p.beta) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(m->moment(1, -2.0) == doctest::Approx(0.25 * (2.0 - 1.0)).epsilon(1e-14));

  // Paper's closed form for the second moment at lattice points.
  auto paper_m2 = [&](double x) {
    const double b = delta * (std::max(-x, 0.0) - p.beta);
    return 2.0 * delta + (b * b - delta * b - delta * delta - 2.0 * delta * delta * p.beta) +
           delta * delta * delta * std::max(-x, 0.0);
  };
  for (double x : {-3.0, -2.0, -1.0, -0.25, 0.0, 1.0, 2.5}) {
    CHECK(m->moment(2, x) == doctest::Approx(paper_m2(x)).epsilon(1e-12));
    CHECK(m->moment(2, x) > 0.0);
  }
  CHECK(m->moment(2, 0.0) == doctest::Approx(0.4375).epsilon(1e-14));

  // Monte Carlo oracle, 1e6 draws, 3.5 sigma.
  for (int k = 1; k <= 3; ++k) {
    for (double x : {-2.0, 0.0}) {
      const auto mc = hospital_mc_moment(p, k, x, 1'000'000, 42 + k);
      CHECK(std::abs(m->moment(k, x) - mc.mean) < 3.5 * mc.se);
    }
  }
}

TEST_CASE("hospital moment scaling across N") {
  // m3 = 6 delta b + O(delta^3), m4 = 12 delta^2 + O(delta^3),
  // m5 = O(delta^3), with polynomially bounded prefactors.
  for (double x : {-2.0, -0.5, 0.0, 1.5}) {
    for (int N : {16, 64, 256, 1024}) {
      HospitalParams p{N, 1.0};
      auto m = make_hospital_model(p);
      const double delta = p.delta();
      const double d3 = delta * delta * delta;
      const double bound = 100.0 * std::pow(1.0 + std::abs(x), 5);
      CHECK(std::abs(m->moment(3, x) - 6.0 * delta * m->moment(1, x)) / d3 < bound);
      CHECK(std::abs(m->moment(4, x) - 12.0 * delta * delta) / d3 < bound);
      CHECK(std::abs(m->moment(5, x)) / d3 < bound);
    }
  }
}

TEST_CASE("hospital reference stationary solve") {
  HospitalParams p{4, 1.0};
  auto ref = hospital_reference(p, 1e-8);
  CHECK(ref.total() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(ref.mean() - (-0.933)) < 0.003);

  auto model = make_hospital_model(p);
  const double ebw = ref.mean_of([&](double x) { return model->drift(x); });
  CHECK(std::abs(ebw) < 1e-8);

  auto ref16 = hospital_reference(HospitalParams{16, 1.0}, 1e-8);
  CHECK(std::abs(ref16.mean() - (-0.865)) < 0.003);

  CHECK_THROWS_AS(hospital_reference(p, 0.5), std::invalid_argument);
}

TEST_CASE("ar1 jump moments: polynomial vs direct formula") {
  // Two independent code paths: Horner on the coefficient vector versus
  // the lemma sum evaluated directly.
  Rng rng(7);
  for (double alpha : {0.9, 0.64, 0.32, 0.16, 0.04}) {
    AR1Params p{alpha};
    auto m = make_ar1_model(p);
    const double delta = p.delta();
    for (int trial = 0; trial < 20; ++trial) {
      const double x = -1.0 / delta + rng.uniform() * 20.0;
      for (int k = 1; k <= 5; ++k) {
        double direct = 1.0;
        double prod = 1.0, sign = 1.0, base = x * delta + 1.0, powb = 1.0;
        for (int i = 1; i <= k; ++i) {
          prod /= (1.0 + i * alpha);
          sign = -sign;
          powb *= base;
          direct += sign * prod * powb;
        }
        double kfact = 1.0, dk = 1.0;
        for (int i = 2; i <= k; ++i) kfact *= i;
        for (int i = 0; i < k; ++i) dk *= delta;
        direct *= kfact * dk;
        const double via_poly = m->moment(k, x);
        CHECK(via_poly == doctest::Approx(direct).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("ar1 drift zero and Monte Carlo moments") {
  AR1Params p{0.04};
  auto m = make_ar1_model(p);
  // Fluid equilibrium at W = sqrt(alpha), i.e. D = 1 + 1/alpha.
  const double xstar = std::sqrt(p.alpha);
  CHECK(m->moment(1, xstar) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(find_drift_zero(*m) == doctest::Approx(xstar).epsilon(1e-9));

  const double a = p.alpha;
  const double expected_m2 = 2.0 * a * (1.0 - 1.0 / (1.0 + a) + 1.0 / ((1.0 + a) * (1.0 + 2.0 * a)));
  CHECK(m->moment(2, 0.0) == doctest::Approx(expected_m2).epsilon(1e-13));
  const auto mc2 = ar1_mc_moment(p, 2, 0.0, 2'000'000, 11);
  CHECK(std::abs(m->moment(2, 0.0) - mc2.mean) < 3.5 * mc2.se);

  AR1Params p5{0.5};
  auto m5 = make_ar1_model(p5);
  const auto mc3 = ar1_mc_moment(p5, 3, 0.0, 2'000'000, 12);
  CHECK(std::abs(m5->moment(3, 0.0) - mc3.mean) < 3.5 * mc3.se);
}

TEST_CASE("ar1 reference sampler") {
  AR1Params p{0.16};
  auto ref = ar1_reference(p, 200'000, 7);

  SUBCASE("deterministic given seed") {
    auto ref2 = ar1_reference(p, 200'000, 7);
    REQUIRE(ref.samples_raw().size() == ref2.samples_raw().size());
    for (std::size_t i = 0; i < ref.samples_raw().size(); i += 997)
      CHECK(ref.samples_raw()[i] == ref2.samples_raw()[i]);
    auto ref3 = ar1_reference(p, 200'000, 8);
    CHECK(ref.samples_raw()[0] != ref3.samples_raw()[0]);
  }

  SUBCASE("positivity of the underlying series") {
    // W > -1/sqrt(alpha) iff D_inf > 0; sorted, so the minimum decides.
    CHECK(ref.samples_sorted().front() > -1.0 / p.delta());
  }

  SUBCASE("log-shift mean matches the reported stationary value") {
    // E log(W + delta*R) = 0.994 at alpha = 0.16.
    const double dR = 1.0 / p.delta();
    const double v = ref.mean_of([&](double x) { return std::log(x + dR); });
    CHECK(std::abs(v - 0.994) < 0.012);
  }

  SUBCASE("stationarity identity E b(W) within Monte Carlo noise") {
    auto m = make_ar1_model(p);
    long double s = 0.0L, s2 = 0.0L;
    for (double x : ref.samples_raw()) {
      const double b = m->drift(x);
      s += b;
      s2 += b * b;
    }
    const double n = static_cast<double>(ref.samples_raw().size());
    const double mean = static_cast<double>(s / n);
    const double se = std::sqrt((static_cast<double>(s2 / n) - mean * mean) / n);
    CHECK(std::abs(mean) < 3.5 * se);
  }

  CHECK_THROWS_AS(ar1_reference(p, 100, 1), std::invalid_argument);
}

TEST_CASE("rng exponential sampler moments") {
  Rng rng(123);
  const int n = 2'000'000;
  double s1 = 0, s2 = 0, s3 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.exponential();
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
  }
  s1 /= n;
  s2 /= n;
  s3 /= n;
  CHECK(s1 == doctest::Approx(1.0).epsilon(5e-3));
  CHECK(s2 == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(s3 == doctest::Approx(6.0).epsilon(3e-2));
}

TEST_CASE("fast negative exp matches std::exp") {
  Rng rng(55);
  for (int i = 0; i < 100'000; ++i) {
    const double x = -40.0 * rng.uniform();
    const double a = exp_neg(x), b = std::exp(x);
    CHECK(std::abs(a - b) <= 4e-16 * b + 1e-300);
  }
  CHECK(exp_neg(0.0) == 1.0);
}
