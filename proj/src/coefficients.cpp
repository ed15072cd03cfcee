#include "vndiff/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vndiff/errors.hpp"

namespace vndiff {

namespace {

// Raw v3-type coefficients have poles where the untruncated v2 crosses
// zero; the floor handles those regions, so evaluation utilities treat
// an exact pole hit as a non-finite point rather than a failure.
double eval_or_nan(const std::function<double(double)>& f, double x) {
  try {
    return f(x);
  } catch (const DivisionByZeroError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double guarded(const std::function<double(double)>& f, double x, double eta) {
  const double raw = eval_or_nan(f, x);
  if (!std::isfinite(raw)) return eta;
  return std::max(raw, eta);
}

// Default scan window for floor-crossing detection: from the support's
// left edge out to well past the fluid equilibrium on the tail scale.
std::pair<double, double> default_window(const ChainModel& model) {
  const Interval sup = model.density_support();
  const double x0 = find_drift_zero(model);
  const double scale = 1.0 / model.delta();
  double lo = std::isfinite(sup.lo) ? sup.lo : x0 - 8.0 * scale;
  double hi = x0 + 60.0 * std::max(1.0, scale / 8.0);
  return {lo, std::min(hi, std::isfinite(sup.hi) ? sup.hi : hi)};
}

void append_sorted_unique(std::vector<double>& dst, std::vector<double> extra) {
  dst.insert(dst.end(), extra.begin(), extra.end());
  std::sort(dst.begin(), dst.end());
  dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
}

// v2_lower = a/2 - b c/(3a) - (a/6)(c/a)'; v2_upper subtracts (1/18) c (c/a)''.
double v2_from_jets(const Jet2& b, const Jet2& a, const Jet2& c, bool upper) {
  const Jet2 r = c / a;
  double val = a.v / 2.0 - b.v * c.v / (3.0 * a.v) - (a.v / 6.0) * r.d1;
  if (upper) val -= c.v * r.d2 / 18.0;
  return val;
}

CoefficientFn make_v2_raw(const ChainModel& model, bool upper) {
  model.moment_jet(3, find_drift_zero(model));  // surfaces Unsupported at build time
  const ChainModel* m = &model;
  CoefficientFn f;
  f.variant = upper ? Variant::V2Upper : Variant::V2Lower;
  f.provenance = std::string(upper ? "v2-upper" : "v2-lower") + "-raw analytic-jets " +
                 model.name() + " " + model.params_str();
  f.kinks = model.kinks();
  f.v = [m, upper](double x) {
    return v2_from_jets(m->moment_jet(1, x), m->moment_jet(2, x), m->moment_jet(3, x), upper);
  };
  return f;
}

CoefficientFn truncate_fn(CoefficientFn raw, double eta, const ChainModel& model) {
  if (!(eta > 0.0)) throw EtaNonPositiveError("coefficient floor eta must be positive");
  auto [lo, hi] = default_window(model);
  CoefficientFn f;
  f.variant = raw.variant;
  f.provenance = raw.provenance + " floored";
  f.eta = eta;
  f.kinks = raw.kinks;
  append_sorted_unique(f.kinks, detect_floor_crossings(raw.v, eta, lo, hi));
  auto inner = raw.v;
  f.v = [inner, eta](double x) { return guarded(inner, x, eta); };
  return f;
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::V0: return "v0";
    case Variant::V1: return "v1";
    case Variant::V2Lower: return "v2";
    case Variant::V2Upper: return "v2u";
    case Variant::V3: return "v3";
    case Variant::Hybrid: return "hybrid";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "v0") return Variant::V0;
  if (s == "v1") return Variant::V1;
  if (s == "v2") return Variant::V2Lower;
  if (s == "v2u") return Variant::V2Upper;
  if (s == "v3") return Variant::V3;
  if (s == "hybrid") return Variant::Hybrid;
  throw std::invalid_argument("unknown coefficient variant: " + s);
}

double default_eta(const ChainModel& model) {
  const double x0 = find_drift_zero(model);
  return 1e-3 * 0.5 * model.moment(2, x0);
}

CoefficientFn build_v0(const ChainModel& model) {
  const double x0 = find_drift_zero(model);
  const double v0 = 0.5 * model.moment(2, x0);
  if (!(v0 > 0.0)) throw NonPositiveVError("v0: second-moment extension not positive at x0");
  CoefficientFn f;
  f.variant = Variant::V0;
  f.provenance = "v0 constant " + model.name() + " " + model.params_str();
  f.v = [v0](double) { return v0; };
  return f;
}

CoefficientFn build_v1(const ChainModel& model) {
  const ChainModel* m = &model;
  const double x0 = find_drift_zero(model);
  auto [lo, hi] = default_window(model);
  for (int i = 0; i <= 256; ++i) {
    const double x = lo + (hi - lo) * i / 256.0;
    if (!(0.5 * model.moment(2, x) > 0.0))
      throw NonPositiveVError("v1: second-moment extension not positive on probe grid");
  }
  (void)x0;
  CoefficientFn f;
  f.variant = Variant::V1;
  f.provenance = "v1 half-second-moment " + model.name() + " " + model.params_str();
  f.kinks = model.kinks();
  f.v = [m](double x) { return 0.5 * m->moment(2, x); };
  return f;
}

CoefficientFn build_v2_lower_raw(const ChainModel& model) { return make_v2_raw(model, false); }
CoefficientFn build_v2_upper_raw(const ChainModel& model) { return make_v2_raw(model, true); }

CoefficientFn build_v2_lower(const ChainModel& model, double eta) {
  return truncate_fn(build_v2_lower_raw(model), eta, model);
}

CoefficientFn build_v2_upper(const ChainModel& model, double eta) {
  return truncate_fn(build_v2_upper_raw(model), eta, model);
}

namespace {

CoefficientFn make_v2_fd(const ChainModel& model, bool upper) {
  model.moment(3, find_drift_zero(model));
  const ChainModel* m = &model;
  CoefficientFn f;
  f.variant = upper ? Variant::V2Upper : Variant::V2Lower;
  f.provenance = std::string(upper ? "v2-upper" : "v2-lower") + "-raw finite-difference " +
                 model.name() + " " + model.params_str();
  f.kinks = model.kinks();
  f.v = [m, upper](double x) {
    auto ca = [m](double t) { return m->moment(3, t) / m->moment(2, t); };
    const double h = 1e-6 * (1.0 + std::abs(x));
    const double d1 = (ca(x + h) - ca(x - h)) / (2.0 * h);
    const double a = m->moment(2, x), b = m->moment(1, x), c = m->moment(3, x);
    double val = a / 2.0 - b * c / (3.0 * a) - (a / 6.0) * d1;
    if (upper) {
      const double d2 = (ca(x + h) - 2.0 * ca(x) + ca(x - h)) / (h * h);
      val -= c * d2 / 18.0;
    }
    return val;
  };
  return f;
}

}  // namespace

CoefficientFn build_v2_lower_fd(const ChainModel& model, double eta) {
  return truncate_fn(make_v2_fd(model, false), eta, model);
}
CoefficientFn build_v2_upper_fd(const ChainModel& model, double eta) {
  return truncate_fn(make_v2_fd(model, true), eta, model);
}

CoefficientFn build_v3_hospital(const HospitalParams& p) {
  p.validate();
  const double delta = p.delta(), beta = p.beta;
  CoefficientFn f;
  f.variant = Variant::V3;
  f.provenance = "v3 hospital closed-form " + p.str();
  f.eta = delta / 2.0;
  // Indicator jump at 0; the delta/2 floor becomes active left of
  // -(sqrt(N)-beta) and stays active to the support edge.
  f.kinks = {-(std::sqrt(static_cast<double>(p.N)) - beta), 0.0};
  f.v = [delta, beta](double x) {
    const double b = delta * (std::max(-x, 0.0) - beta);
    const double ind = (x < 0.0) ? 1.0 : 0.0;
    const double raw =
        delta + 0.5 * (delta * delta * ind - delta * b - delta * delta - 2.0 * delta * delta * beta);
    return std::max(raw, delta / 2.0);
  };
  return f;
}

CoefficientFn build_v3_ar1_raw(const AR1Params& p) {
  p.validate();
  const double delta = p.delta(), alpha = p.alpha;
  const Poly p1 = ar1_moment_poly(p, 1), p2 = ar1_moment_poly(p, 2);
  const Poly p3 = ar1_moment_poly(p, 3), p4 = ar1_moment_poly(p, 4);
  CoefficientFn f;
  f.variant = Variant::V3;
  f.provenance = "v3-raw ar1 moment-polynomials " + p.str();
  f.v = [=](double x) {
    const Jet2 P1 = p1.jet(x), P2 = p2.jet(x), P3 = p3.jet(x), P4 = p4.jet(x);
    if (P2.v == 0.0) throw DivisionByZeroError("ar1 v3: p2(x) = 0 at evaluation point");
    const Jet2 r42 = P4 / P2;
    const Jet2 q14 = P1 * P4 / (2.0 * P2);
    const double p3b = (P3.v - q14.v - 0.25 * delta * P2.v * r42.d1) / 6.0;
    const double p3bd =
        (P3.d1 - q14.d1 - 0.25 * delta * (P2.d1 * r42.d1 + P2.v * r42.d2)) / 6.0;
    const Jet2 r32 = P3 / P2;
    const Jet2 q13 = P1 * P3 / (3.0 * P2);
    const double p2l = P2.v / 2.0 - q13.v - delta * (P2.v / 6.0) * r32.d1;
    const double p2ld =
        P2.d1 / 2.0 - q13.d1 - delta * (P2.d1 * r32.d1 + P2.v * r32.d2) / 6.0;
    if (p2l == 0.0) throw DivisionByZeroError("ar1 v3: truncated second-order polynomial zero");
    // p2low * (p3bar/p2low)' collapses to (p3bar' p2low - p3bar p2low')/p2low.
    const double ratio_term = (p3bd * p2l - p3b * p2ld) / p2l;
    return alpha * (P2.v / 2.0 - P1.v * p3b / p2l - delta * ratio_term);
  };
  return f;
}

CoefficientFn build_v3_ar1(const AR1Params& p, double eta) {
  if (!(eta > 0.0)) throw EtaNonPositiveError("coefficient floor eta must be positive");
  CoefficientFn raw = build_v3_ar1_raw(p);
  auto model = make_ar1_model(p);
  return truncate_fn(std::move(raw), eta, *model);
}

CoefficientFn build_v3_generic_raw(const ChainModel& model) {
  model.moment_jet(4, find_drift_zero(model));
  const ChainModel* m = &model;
  CoefficientFn f;
  f.variant = Variant::V3;
  f.provenance = "v3-raw generic-recursion " + model.name() + " " + model.params_str();
  f.kinks = model.kinks();
  f.v = [m](double x) {
    const Jet2 B = m->moment_jet(1, x), A = m->moment_jet(2, x);
    const Jet2 C = m->moment_jet(3, x), D = m->moment_jet(4, x);
    if (A.v == 0.0) throw DivisionByZeroError("v3 generic: second moment zero");
    const Jet2 rda = D / A;
    const Jet2 qbd = B * D / (12.0 * A);
    // cbar = c/6 - b d/(12 a) - (a/24)(d/a)'
    const double cb = C.v / 6.0 - qbd.v - (A.v / 24.0) * rda.d1;
    const double cbd = C.d1 / 6.0 - qbd.d1 - (A.d1 * rda.d1 + A.v * rda.d2) / 24.0;
    const Jet2 rca = C / A;
    const Jet2 qbc = B * C / (3.0 * A);
    const double v2 = A.v / 2.0 - qbc.v - (A.v / 6.0) * rca.d1;
    const double v2d = A.d1 / 2.0 - qbc.d1 - (A.d1 * rca.d1 + A.v * rca.d2) / 6.0;
    if (v2 == 0.0) throw DivisionByZeroError("v3 generic: untruncated v2 zero");
    const double ratio_term = (cbd * v2 - cb * v2d) / v2;
    return A.v / 2.0 - B.v * cb / v2 - ratio_term;
  };
  return f;
}

std::vector<double> detect_floor_crossings(const std::function<double(double)>& raw, double eta,
                                           double lo, double hi, int scan_points) {
  std::vector<double> out;
  if (!(hi > lo)) return out;
  auto g = [&](double x) { return eval_or_nan(raw, x) - eta; };
  double prev_x = lo, prev_g = g(lo);
  for (int i = 1; i <= scan_points; ++i) {
    const double x = lo + (hi - lo) * i / scan_points;
    const double gx = g(x);
    if (std::isfinite(prev_g) && std::isfinite(gx) && prev_g * gx < 0.0) {
      double a = prev_x, b = x, ga = prev_g;
      for (int it = 0; it < 100 && (b - a) > 1e-10 * (1.0 + std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = g(mid);
        if ((ga < 0.0) == (gm < 0.0)) {
          a = mid;
          ga = gm;
        } else {
          b = mid;
        }
      }
      out.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_g = gx;
  }
  return out;
}

double find_hybrid_K(const CoefficientFn& v3_raw, const CoefficientFn& v2_raw, double lo,
                     double x_max) {
  constexpr int kScan = 10'000;
  auto g = [&](double x) { return eval_or_nan(v3_raw.v, x) - eval_or_nan(v2_raw.v, x); };
  double right = x_max;
  double gx_hi = g(right);
  for (int i = kScan - 1; i >= 0; --i) {
    const double x = lo + (x_max - lo) * i / kScan;
    const double gx_lo = g(x);
    if (std::isfinite(gx_lo) && std::isfinite(gx_hi) && gx_lo * gx_hi <= 0.0 &&
        (gx_lo != 0.0 || gx_hi != 0.0)) {
      double a = x, b = right, ga = gx_lo;
      while (b - a > 1e-10) {
        const double mid = 0.5 * (a + b);
        const double gm = g(mid);
        if ((ga <= 0.0) == (gm <= 0.0)) {
          a = mid;
          ga = gm;
        } else {
          b = mid;
        }
      }
      return 0.5 * (a + b);
    }
    right = x;
    gx_hi = gx_lo;
  }
  return kInf;  // no sign change: hybrid degenerates to pure v3
}

CoefficientFn build_hybrid(const CoefficientFn& v3_raw, const CoefficientFn& v2_raw, double K,
                           double eta) {
  if (!(eta > 0.0)) throw EtaNonPositiveError("coefficient floor eta must be positive");
  CoefficientFn f;
  f.variant = Variant::Hybrid;
  f.provenance = "hybrid [" + v3_raw.provenance + " | " + v2_raw.provenance + "]";
  f.eta = eta;
  f.K = K;
  f.kinks = v3_raw.kinks;
  append_sorted_unique(f.kinks, v2_raw.kinks);
  if (std::isfinite(K)) append_sorted_unique(f.kinks, {K});
  auto f3 = v3_raw.v, f2 = v2_raw.v;
  f.v = [f3, f2, K, eta](double x) { return guarded(x <= K ? f3 : f2, x, eta); };
  return f;
}

}  // namespace vndiff
