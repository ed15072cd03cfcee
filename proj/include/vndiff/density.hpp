#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vndiff/coefficients.hpp"
#include "vndiff/models.hpp"

namespace vndiff {

// Test-function tags for density moments.
enum class HTag {
  Identity,           // h(x) = x
  One,                // h(x) = 1 (normalization check)
  PositivePartShift,  // h(x) = (x - param)^+
  LogShift,           // h(x) = log(x + param)
  IndicatorGeq,       // h(x) = 1(x >= param)
  IndicatorLeq,       // h(x) = 1(x <= param)
};

struct DensityOptions {
  double tol = 1e-10;  // relative quadrature tolerance
  // Effective support ends where the density falls below this relative level.
  double tail_log_cut = -36.841361487904734;  // log(1e-16)
  std::vector<double> extra_breakpoints;      // forced nodes (drift kinks etc.)
};

// Stationary density of the diffusion with drift b and coefficient v:
// kappa/v(x) * exp(int_0^x b/v). Grid of nodes with exponent table and
// per-cell masses; queries refine locally by adaptive quadrature.
class StationaryDensity {
 public:
  double pdf(double x) const;
  double cdf(double x) const;   // P(Y <= x)
  double ccdf(double x) const;  // P(Y >= x), integrated from the right tail
  double exponent(double x) const;  // E(x) = int_0^x b/v (0 outside support)
  double log_kappa() const;
  double quantile(double q) const;
  double moment(HTag h, double param = 0.0) const;
  double mean() const { return moment(HTag::Identity); }

  Interval effective_support() const { return {node_.front(), node_.back()}; }
  double tol() const { return opt_.tol; }

  // log of the unnormalized integrals int_{-inf}^x (1/v) e^{E} and its
  // right-tail companion; the Poisson-equation closed forms need these.
  double log_unnorm_cdf(double x) const;
  double log_unnorm_ccdf(double x) const;

  const CoefficientFn& coefficient() const { return v_; }
  double drift(double x) const { return b_(x); }

  // Tabulate x,pdf,cdf rows (plot-ready output).
  struct Row {
    double x, pdf, cdf;
  };
  std::vector<Row> tabulate(std::size_t max_rows = 2000) const;

 private:
  friend StationaryDensity build_density(std::function<double(double)> b, CoefficientFn v,
                                         Interval support, const DensityOptions& opt);

  double exponent_from_node(std::size_t i, double x) const;
  double partial_mass(std::size_t i, double a, double b) const;
  std::size_t locate(double x) const;

  std::function<double(double)> b_;
  CoefficientFn v_;
  DensityOptions opt_;
  std::vector<double> node_;      // x_0 < ... < x_m
  std::vector<double> expo_;      // E(x_i), anchored E(0) = 0
  std::vector<double> cellmass_;  // int_cell exp(E - Emax)/v
  std::vector<double> prefix_;    // cumulative cell masses from the left
  std::vector<double> suffix_;    // cumulative from the right
  double emax_ = 0.0;
  double total_ = 0.0;     // sum of cell masses
  bool left_hard_ = false;  // ends at a support boundary rather than a tail cut
  bool right_hard_ = false;
};

StationaryDensity build_density(std::function<double(double)> b, CoefficientFn v,
                                Interval support, const DensityOptions& opt = {});

// Convenience: density of the given coefficient over a model's drift and
// support, with the model's kinks as forced breakpoints. The density
// keeps a reference to the model (as does any CoefficientFn built from
// one), so the model must outlive it.
StationaryDensity build_model_density(const ChainModel& model, CoefficientFn v,
                                      const DensityOptions& opt = {});

}  // namespace vndiff
