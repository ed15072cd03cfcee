#include "vndiff/stein.hpp"

#include <algorithm>
#include <cmath>

#include "vndiff/coefficients.hpp"
#include "vndiff/errors.hpp"

namespace vndiff {

PoissonSolution::PoissonSolution(PoissonVariant variant, double z,
                                 const StationaryDensity& density)
    : variant_(variant), z_(z), d_(&density) {
  tail_ = (variant == PoissonVariant::V1) ? density.cdf(-z) : density.ccdf(z);
}

double PoissonSolution::rhs(double x) const {
  if (variant_ == PoissonVariant::V1) return tail_ - (x <= -z_ ? 1.0 : 0.0);
  return (x >= z_ ? 1.0 : 0.0) - tail_;
}

double PoissonSolution::fprime(double x) const {
  // f'(x) = e^{-E(x)} * int_{-inf}^x g dP_Y / kappa with g the equation's
  // right-hand side; the two-branch closed form below is that integral.
  const double E = d_->exponent(x);
  if (variant_ == PoissonVariant::V1) {
    if (x <= -z_) {
      const double comp = 1.0 - tail_;  // P(Y1 >= -z)
      return -comp * std::exp(-E + d_->log_unnorm_cdf(x));
    }
    return -tail_ * std::exp(-E + d_->log_unnorm_ccdf(x));
  }
  if (x < z_) {
    return -tail_ * std::exp(-E + d_->log_unnorm_cdf(x));
  }
  const double comp = 1.0 - tail_;  // P(Y0 <= z)
  return -comp * std::exp(-E + d_->log_unnorm_ccdf(x));
}

double PoissonSolution::fsecond(double x) const {
  const double v = d_->coefficient()(x);
  return (rhs(x) - d_->drift(x) * fprime(x)) / v;
}

double poisson_fprime(const PoissonSolution& sol, double x) { return sol.fprime(x); }

SteinFactorReport stein_factor_scan(const ErlangCParams& p, PoissonVariant variant, double z,
                                    const StationaryDensity& density,
                                    const std::vector<double>& grid) {
  const PoissonSolution sol(variant, z, density);
  const double mu = p.mu;
  const double T = sol.tail();
  SteinFactorReport rep;
  for (double x : grid) {
    const double b = density.drift(x);
    const double babs = std::max(std::abs(b), 1e-300);
    const double bterm = std::min(mu / babs, 1.0);
    double env1, env2;
    if (variant == PoissonVariant::V1) {
      // Lemma envelope for the left-tail solution.
      const double mid = (x > -z && x < 0.0) ? std::exp(-density.exponent(x)) : 0.0;
      env1 = (x <= -z ? bterm : 0.0) + T * (mid + (x >= 0.0 ? bterm : 0.0));
      env2 = (x <= -z ? 1.0 : 0.0) + T * (mid * (1.0 + std::abs(x)) + (x >= 0.0 ? 1.0 : 0.0));
    } else {
      // Mirrored regions for the right-tail v0 solution.
      const double mid = (x > 0.0 && x < z) ? std::exp(-density.exponent(x)) : 0.0;
      env1 = (x >= z ? bterm : 0.0) + T * (mid + (x <= 0.0 ? bterm : 0.0));
      env2 = (x >= z ? 1.0 : 0.0) + T * (mid * (1.0 + std::abs(x)) + (x <= 0.0 ? 1.0 : 0.0));
    }
    if (!(env1 > 0.0) || !(env2 > 0.0)) continue;
    rep.sup_ratio_fprime = std::max(rep.sup_ratio_fprime, mu * std::abs(sol.fprime(x)) / env1);
    rep.sup_ratio_fsecond = std::max(rep.sup_ratio_fsecond, mu * std::abs(sol.fsecond(x)) / env2);
  }
  return rep;
}

MdReport moderate_deviation_curves(const std::vector<double>& R_sweep, double beta, double z_cap,
                                   double tol) {
  if (R_sweep.empty()) throw std::invalid_argument("moderate_deviation_curves: empty sweep");
  MdReport rep;
  for (double R : R_sweep) {
    const double sqrtR = std::sqrt(R);
    const int n = static_cast<int>(std::lround(R + beta * sqrtR));
    ErlangCParams p{R, 1.0, n};
    p.validate();
    auto model = make_erlangc_model(p);
    const LatticeDistribution ref = erlangc_reference(p);
    DensityOptions opt;
    opt.tol = tol;
    const StationaryDensity y0 = build_model_density(*model, build_v0(*model), opt);
    const StationaryDensity y1 = build_model_density(*model, build_v1(*model), opt);

    const double zmax = z_cap * sqrtR;
    for (int side_i = 0; side_i < 2; ++side_i) {
      const TailSide side = side_i == 0 ? TailSide::Right : TailSide::Left;
      std::vector<double> zs;
      for (double z : default_z_grid(ref, side, 1e-8, 48))
        if (z <= zmax) zs.push_back(z);
      if (zs.empty()) continue;
      for (int var_i = 0; var_i < 2; ++var_i) {
        const PoissonVariant variant = var_i == 0 ? PoissonVariant::V0 : PoissonVariant::V1;
        const StationaryDensity& y = var_i == 0 ? y0 : y1;
        auto pts = relative_tail_error(ref, y, zs, side);
        MdSummary sum{R, side, variant, 0.0};
        for (const auto& pt : pts) {
          double env;
          if (variant == PoissonVariant::V0)
            env = (side == TailSide::Right) ? (1.0 + pt.z) / sqrtR
                                            : (1.0 + pt.z * pt.z * pt.z) / sqrtR;
          else
            env = (side == TailSide::Right)
                      ? (1.0 + pt.z / sqrtR) / sqrtR
                      : (1.0 + pt.z + pt.z * pt.z * pt.z * pt.z / sqrtR) / sqrtR;
          MdPoint mp{R, pt.z, side, variant, pt.rel_error, env, pt.rel_error / env};
          sum.max_normalized = std::max(sum.max_normalized, mp.normalized);
          rep.points.push_back(mp);
        }
        rep.summaries.push_back(sum);
      }
    }
  }
  return rep;
}

}  // namespace vndiff
