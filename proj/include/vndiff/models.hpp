#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "vndiff/jet.hpp"
#include "vndiff/polynomial.hpp"

namespace vndiff {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo = -kInf;
  double hi = kInf;
};

// Reference distribution of the scaled chain W: either an exact pmf on
// the lattice delta*(k - R), or i.i.d. samples (AR(1)).
class LatticeDistribution {
 public:
  static LatticeDistribution from_pmf(std::vector<double> atoms, std::vector<double> probs,
                                      std::string model, std::string params);
  static LatticeDistribution from_samples(std::vector<double> draws, std::uint64_t seed,
                                          std::string model, std::string params);

  bool is_sample() const { return is_sample_; }
  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& probs() const { return probs_; }
  // Samples in generation order (for block resampling) and sorted.
  const std::vector<double>& samples_raw() const { return raw_; }
  const std::vector<double>& samples_sorted() const { return atoms_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return atoms_.size(); }

  double total() const { return total_; }
  double mean() const;
  double mean_of(const std::function<double(double)>& h) const;
  double cdf(double z) const;       // P(W <= z)
  double cdf_left(double z) const;  // P(W < z)
  double ccdf(double z) const;      // P(W >= z)
  double quantile(double q) const;

  const std::string& model() const { return model_; }
  const std::string& params() const { return params_; }

 private:
  bool is_sample_ = false;
  std::vector<double> atoms_;   // ascending atoms, or sorted samples
  std::vector<double> probs_;   // pmf (empty for samples)
  std::vector<double> raw_;     // samples in generation order
  std::vector<double> prefix_;  // P(W <= atom_i)
  std::vector<double> suffix_;  // P(W >= atom_i)
  double total_ = 1.0;
  std::uint64_t seed_ = 0;
  std::string model_, params_;
};

struct ErlangCParams {
  double lambda = 1.0;
  double mu = 1.0;
  int n = 1;

  double R() const { return lambda / mu; }
  double rho() const { return R() / n; }
  double delta() const;
  double beta() const { return delta() * (n - R()); }
  void validate() const;
  std::string str() const;
};

struct HospitalParams {
  int N = 1;
  double beta = 1.0;

  double delta() const;
  double mu() const { return delta(); }
  double Lambda() const;
  void validate() const;
  std::string str() const;
};

struct AR1Params {
  double alpha = 0.5;

  double delta() const;
  double R() const { return 1.0 / alpha; }
  void validate() const;
  std::string str() const;
};

// A one-dimensional Markov chain model: scaling, support, and the
// extension of the conditional jump moments E(Delta^k | W = x) to the
// density-building interval. moment(1,.) is the drift used by the
// density engine.
class ChainModel {
 public:
  virtual ~ChainModel() = default;

  virtual std::string name() const = 0;
  virtual std::string params_str() const = 0;
  virtual double delta() const = 0;
  virtual double center() const = 0;
  // Interval the approximating diffusion is built on.
  virtual Interval density_support() const = 0;
  // Left edge of the chain's own support (lattice / sample support).
  virtual double chain_left_edge() const = 0;
  virtual int max_moment() const = 0;
  virtual double moment(int k, double x) const = 0;
  // Value plus exact first/second derivative (left-sided at kinks).
  virtual Jet2 moment_jet(int k, double x) const = 0;
  virtual std::vector<double> kinks() const = 0;

  double drift(double x) const { return moment(1, x); }
};

std::unique_ptr<ChainModel> make_erlangc_model(const ErlangCParams& p);
std::unique_ptr<ChainModel> make_hospital_model(const HospitalParams& p);
std::unique_ptr<ChainModel> make_ar1_model(const AR1Params& p);

// Synthetic model with polynomial moment extensions; used by tests and
// the generic-coefficient reduction checks.
class PolynomialModel : public ChainModel {
 public:
  PolynomialModel(std::vector<Poly> moments, Interval support, double delta = 1.0)
      : moments_(std::move(moments)), support_(support), delta_(delta) {}

  std::string name() const override { return "poly"; }
  std::string params_str() const override { return ""; }
  double delta() const override { return delta_; }
  double center() const override { return 0.0; }
  Interval density_support() const override { return support_; }
  double chain_left_edge() const override { return support_.lo; }
  int max_moment() const override { return static_cast<int>(moments_.size()); }
  double moment(int k, double x) const override;
  Jet2 moment_jet(int k, double x) const override;
  std::vector<double> kinks() const override { return {}; }

 private:
  std::vector<Poly> moments_;
  Interval support_;
  double delta_;
};

// AR(1) jump-moment polynomial p_k, where E(Delta^k | W = x) = delta^k p_k(x).
Poly ar1_moment_poly(const AR1Params& p, int k);

// Locates the unique drift zero by bisection on the nonincreasing drift.
double find_drift_zero(const ChainModel& model, double tol = 1e-12);

// Exact stationary pmf of the M/M/n queue on the lattice delta*(k-R),
// birth-death recursion in log space, tail truncated below 1e-14.
LatticeDistribution erlangc_reference(const ErlangCParams& p);

// Stationary pmf of the hospital DTMC by dense linear solve on a
// truncated state space {0..M}.
LatticeDistribution hospital_reference(const HospitalParams& p, double tail_eps = 1e-8);

// i.i.d. samples of W = sqrt(alpha)(D_inf - 1/alpha) via the series
// representation, truncated when the multiplicative weight drops below
// 1e-12. Deterministic given (seed); work is split over fixed chunks so
// the stream does not depend on thread count.
LatticeDistribution ar1_reference(const AR1Params& p, std::int64_t n_samples,
                                  std::uint64_t seed);

// Classical Erlang-C delay probability P(X >= n), computed by the
// standard stable recursion; used as an independent oracle in tests.
double erlang_c_delay_probability(double R, int n);

}  // namespace vndiff
