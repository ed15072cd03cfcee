#pragma once

#include <vector>

#include "vndiff/density.hpp"
#include "vndiff/metrics.hpp"
#include "vndiff/models.hpp"

namespace vndiff {

enum class PoissonVariant { V0, V1 };

// Closed-form solution of the Erlang-C Poisson (Stein) equation:
//   v1:  b f' + (a/2) f'' = P(Y1 <= -z) - 1(x <= -z)
//   v0:  b f' + mu    f'' = 1(x >= z)  - P(Y0 >= z)
// evaluated through the density's exponent and unnormalized tails.
class PoissonSolution {
 public:
  PoissonSolution(PoissonVariant variant, double z, const StationaryDensity& density);

  double fprime(double x) const;
  // From the rearranged equation (exact given fprime).
  double fsecond(double x) const;
  double rhs(double x) const;
  double tail() const { return tail_; }  // P(Y1 <= -z) or P(Y0 >= z)
  PoissonVariant variant() const { return variant_; }
  double threshold() const { return z_; }

 private:
  PoissonVariant variant_;
  double z_;
  double tail_;
  const StationaryDensity* d_;
};

// Spec-level convenience: f'(x) for the given variant at threshold z.
double poisson_fprime(const PoissonSolution& sol, double x);

struct SteinFactorReport {
  double sup_ratio_fprime = 0.0;   // sup over grid of mu*|f'| / envelope
  double sup_ratio_fsecond = 0.0;  // sup over grid of mu*|f''| / envelope
};

// Empirical Stein-factor magnitudes against the lemma's indicator and
// exponential envelope; the unknown constant C is reported, not asserted.
SteinFactorReport stein_factor_scan(const ErlangCParams& p, PoissonVariant variant, double z,
                                    const StationaryDensity& density,
                                    const std::vector<double>& grid);

struct MdPoint {
  double R = 0.0;
  double z = 0.0;
  TailSide side = TailSide::Right;
  PoissonVariant variant = PoissonVariant::V0;
  double raw_error = 0.0;
  double envelope = 0.0;
  double normalized = 0.0;
};

struct MdSummary {
  double R = 0.0;
  TailSide side = TailSide::Right;
  PoissonVariant variant = PoissonVariant::V0;
  double max_normalized = 0.0;
};

struct MdReport {
  std::vector<MdPoint> points;
  std::vector<MdSummary> summaries;
};

// Relative tail errors over z in (0, z_cap*sqrt(R)] normalized by the
// moderate-deviation envelopes; fixed beta, sweep over R (n = R + beta
// sqrt(R) must be integral).
MdReport moderate_deviation_curves(const std::vector<double>& R_sweep, double beta,
                                   double z_cap = 0.5, double tol = 1e-10);

}  // namespace vndiff
