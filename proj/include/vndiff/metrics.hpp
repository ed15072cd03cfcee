#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vndiff/density.hpp"
#include "vndiff/models.hpp"

namespace vndiff {

// One computed error value, serializable to CSV/JSON.
struct ErrorRecord {
  std::string model;
  std::string variant;
  std::string metric;
  double param1 = 0.0;  // primary sweep value (R, N, alpha, z, ...)
  double param2 = 0.0;  // secondary (rho, beta, ...)
  double value = 0.0;
  double stderr_boot = 0.0;  // 0 when the reference is exact
};

struct ErrorReport {
  std::vector<ErrorRecord> records;
  void append(ErrorRecord r) { records.push_back(std::move(r)); }
};

// sup_x |F_W - F_Y|, attained at reference atoms / sample points.
double kolmogorov(const LatticeDistribution& w, const StationaryDensity& y);

// int |F_W - F_Y| dx over the union of supports.
double wasserstein1(const LatticeDistribution& w, const StationaryDensity& y);

struct TailErrorPoint {
  double z = 0.0;
  double ref_tail = 0.0;   // P(W >= z) or P(W <= -z)
  double approx_tail = 0.0;
  double rel_error = 0.0;  // |approx/ref - 1|
};

enum class TailSide { Right, Left };

// Relative tail errors |P(Y >= z)/P(W >= z) - 1| (right side; the left
// side uses <= -z). Throws ZeroDenominator when the reference tail
// vanishes at some z.
std::vector<TailErrorPoint> relative_tail_error(const LatticeDistribution& w,
                                                const StationaryDensity& y,
                                                const std::vector<double>& z_list, TailSide side);

// Default z grid: reference atoms with tail probability within
// [p_floor, 0.5], thinned to at most max_points.
std::vector<double> default_z_grid(const LatticeDistribution& w, TailSide side,
                                   double p_floor = 1e-8, std::size_t max_points = 64);

struct ExpectationError {
  double absolute = 0.0;
  std::optional<double> relative;  // set when |E h(W)| > 1e-8
};

ExpectationError expectation_error(const LatticeDistribution& w, const StationaryDensity& y,
                                   HTag h, double param = 0.0);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least-squares fit of log(error) against log(scale).
RateFit rate_fit(const std::vector<double>& scale, const std::vector<double>& error);

// Block bootstrap over a Monte Carlo sample (contiguous blocks of the
// generation-order stream). `stat` maps per-block aggregate sums to the
// statistic of interest; returns the bootstrap standard error.
class BlockBootstrap {
 public:
  BlockBootstrap(const std::vector<double>& raw_samples, std::size_t n_blocks = 1000,
                 std::uint64_t seed = 0x9e3779b9u);

  // Registers a per-sample functional; returns its slot index.
  std::size_t add_sum(const std::function<double(double)>& f);
  void finalize();  // computes per-block sums

  // Standard error of `stat` over 200 resamples. `stat` receives the
  // per-slot means for a resampled data set.
  double stderr_of(const std::function<double(const std::vector<double>&)>& stat,
                   int resamples = 200) const;
  std::vector<double> observed_means() const;

 private:
  const std::vector<double>& raw_;
  std::size_t n_blocks_;
  std::uint64_t seed_;
  std::vector<std::function<double(double)>> fns_;
  std::vector<std::vector<double>> block_sums_;  // [slot][block]
  std::vector<double> block_count_;
  bool finalized_ = false;
};

}  // namespace vndiff
