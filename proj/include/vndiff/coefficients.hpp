#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vndiff/models.hpp"

namespace vndiff {

enum class Variant { V0, V1, V2Lower, V2Upper, V3, Hybrid };

std::string variant_name(Variant v);
Variant variant_from_string(const std::string& s);  // v0 v1 v2 v2u v3 hybrid

struct CoefficientSpec {
  Variant variant = Variant::V1;
  double eta = -1.0;        // <= 0: auto (1e-3 * v0)
  double K = kInf;          // hybrid switch point; inf = auto-detect
  bool fallback_v1 = false; // hybrid splices with v1 instead of v2
};

// Diffusion coefficient v(x) on the model's density support. kinks
// lists points where v is not differentiable (includes jump points and
// truncation boundaries); eta is the floor actually applied.
struct CoefficientFn {
  std::function<double(double)> v;
  Variant variant = Variant::V1;
  std::string provenance;
  double eta = 0.0;
  double K = kInf;
  std::vector<double> kinks;

  double operator()(double x) const { return v(x); }
};

// eta default: a small fraction of the local-equilibrium diffusion scale.
double default_eta(const ChainModel& model);

CoefficientFn build_v0(const ChainModel& model);
CoefficientFn build_v1(const ChainModel& model);
CoefficientFn build_v2_lower(const ChainModel& model, double eta);
CoefficientFn build_v2_upper(const ChainModel& model, double eta);
CoefficientFn build_v3_hospital(const HospitalParams& p);
CoefficientFn build_v3_ar1(const AR1Params& p, double eta);

// Untruncated coefficients (may be negative); used by the hybrid switch
// search and by dual-route consistency tests.
CoefficientFn build_v2_lower_raw(const ChainModel& model);
CoefficientFn build_v2_upper_raw(const ChainModel& model);
// Generic recursion for the untruncated third-order coefficient from
// jump moments k <= 4; independent of the AR(1) polynomial route.
CoefficientFn build_v3_generic_raw(const ChainModel& model);
// AR(1) third-order coefficient assembled from the explicit moment
// polynomials (quotient-rule derivatives on exact polynomial jets).
CoefficientFn build_v3_ar1_raw(const AR1Params& p);

// Finite-difference variants of the v2 builders (independent derivative
// route for tests); central step h = 1e-6 * (1 + |x|).
CoefficientFn build_v2_lower_fd(const ChainModel& model, double eta);
CoefficientFn build_v2_upper_fd(const ChainModel& model, double eta);

// Largest root of v3 - v2 on [lo, x_max] by sign scan over 1e4
// subintervals plus bisection to 1e-10; +inf when no sign change.
double find_hybrid_K(const CoefficientFn& v3_raw, const CoefficientFn& v2_raw, double lo,
                     double x_max);

// v3 left of K, v2 right of K, floored at eta after splicing.
CoefficientFn build_hybrid(const CoefficientFn& v3_raw, const CoefficientFn& v2_raw, double K,
                           double eta);

// Floor-crossing points of raw - eta on [lo, hi] (sign scan + bisection);
// these belong in the truncated coefficient's kink set.
std::vector<double> detect_floor_crossings(const std::function<double(double)>& raw, double eta,
                                           double lo, double hi, int scan_points = 8192);

}  // namespace vndiff
