#include "vndiff/models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numeric>

#include "vndiff/errors.hpp"
#include "vndiff/rng.hpp"

namespace vndiff {

namespace {

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

double kahan_sum(const std::vector<double>& v) {
  double s = 0.0, c = 0.0;
  for (double x : v) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// LatticeDistribution

LatticeDistribution LatticeDistribution::from_pmf(std::vector<double> atoms,
                                                  std::vector<double> probs,
                                                  std::string model, std::string params) {
  LatticeDistribution d;
  d.is_sample_ = false;
  d.atoms_ = std::move(atoms);
  d.probs_ = std::move(probs);
  d.model_ = std::move(model);
  d.params_ = std::move(params);
  const std::size_t n = d.atoms_.size();
  d.prefix_.resize(n);
  d.suffix_.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) d.prefix_[i] = (acc += d.probs_[i]);
  acc = 0.0;
  for (std::size_t i = n; i-- > 0;) d.suffix_[i] = (acc += d.probs_[i]);
  d.total_ = d.prefix_.empty() ? 0.0 : d.prefix_.back();
  return d;
}

LatticeDistribution LatticeDistribution::from_samples(std::vector<double> draws,
                                                      std::uint64_t seed, std::string model,
                                                      std::string params) {
  LatticeDistribution d;
  d.is_sample_ = true;
  d.raw_ = std::move(draws);
  d.atoms_ = d.raw_;
  std::sort(d.atoms_.begin(), d.atoms_.end());
  d.seed_ = seed;
  d.total_ = 1.0;
  d.model_ = std::move(model);
  d.params_ = std::move(params);
  return d;
}

double LatticeDistribution::mean() const {
  if (is_sample_) {
    long double s = 0.0L;
    for (double x : raw_) s += x;
    return static_cast<double>(s / static_cast<long double>(raw_.size()));
  }
  std::vector<double> terms(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) terms[i] = atoms_[i] * probs_[i];
  return kahan_sum(terms) / total_;
}

double LatticeDistribution::mean_of(const std::function<double(double)>& h) const {
  if (is_sample_) {
    long double s = 0.0L;
    for (double x : raw_) s += h(x);
    return static_cast<double>(s / static_cast<long double>(raw_.size()));
  }
  std::vector<double> terms(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) terms[i] = h(atoms_[i]) * probs_[i];
  return kahan_sum(terms) / total_;
}

double LatticeDistribution::cdf(double z) const {
  auto it = std::upper_bound(atoms_.begin(), atoms_.end(), z);
  const std::size_t idx = static_cast<std::size_t>(it - atoms_.begin());
  if (is_sample_) return static_cast<double>(idx) / static_cast<double>(atoms_.size());
  if (idx == 0) return 0.0;
  return prefix_[idx - 1] / total_;
}

double LatticeDistribution::cdf_left(double z) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), z);
  const std::size_t idx = static_cast<std::size_t>(it - atoms_.begin());
  if (is_sample_) return static_cast<double>(idx) / static_cast<double>(atoms_.size());
  if (idx == 0) return 0.0;
  return prefix_[idx - 1] / total_;
}

double LatticeDistribution::ccdf(double z) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), z);
  const std::size_t idx = static_cast<std::size_t>(it - atoms_.begin());
  if (is_sample_)
    return static_cast<double>(atoms_.size() - idx) / static_cast<double>(atoms_.size());
  if (idx >= atoms_.size()) return 0.0;
  return suffix_[idx] / total_;
}

double LatticeDistribution::quantile(double q) const {
  if (is_sample_) {
    const auto n = atoms_.size();
    std::size_t idx = static_cast<std::size_t>(q * static_cast<double>(n));
    if (idx >= n) idx = n - 1;
    return atoms_[idx];
  }
  const double target = q * total_;
  auto it = std::lower_bound(prefix_.begin(), prefix_.end(), target);
  if (it == prefix_.end()) return atoms_.back();
  return atoms_[static_cast<std::size_t>(it - prefix_.begin())];
}

// ---------------------------------------------------------------------------
// Parameters

double ErlangCParams::delta() const { return 1.0 / std::sqrt(R()); }

void ErlangCParams::validate() const {
  if (lambda <= 0 || mu <= 0 || n <= 0) throw std::invalid_argument("erlangc: lambda, mu, n must be positive");
  if (rho() >= 1.0) throw UnstableError(fmt("erlangc: rho=%g >= 1, chain not positive recurrent", rho()));
}

std::string ErlangCParams::str() const {
  return fmt("lambda=%.17g,mu=%.17g,n=%d", lambda, mu, n);
}

double HospitalParams::delta() const { return 1.0 / std::sqrt(static_cast<double>(N)); }

double HospitalParams::Lambda() const { return std::sqrt(static_cast<double>(N)) - beta; }

void HospitalParams::validate() const {
  if (N <= 0 || beta <= 0) throw std::invalid_argument("hospital: N and beta must be positive");
  if (Lambda() <= 0)
    throw std::invalid_argument(fmt("hospital: sqrt(N)=%g must exceed beta=%g", std::sqrt(double(N)), beta));
  if (Lambda() >= N * mu()) throw UnstableError("hospital: Lambda >= N*mu, not positive recurrent");
}

std::string HospitalParams::str() const { return fmt("N=%d,beta=%.17g", N, beta); }

double AR1Params::delta() const { return std::sqrt(alpha); }

void AR1Params::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ar1: alpha must be in (0,1)");
}

std::string AR1Params::str() const { return fmt("alpha=%.17g", alpha); }

// ---------------------------------------------------------------------------
// Erlang-C model

namespace {

class ErlangCModel final : public ChainModel {
 public:
  explicit ErlangCModel(const ErlangCParams& p) : p_(p) {
    p_.validate();
    sqrtR_ = std::sqrt(p_.R());
    beta_ = p_.beta();
    delta_ = p_.delta();
  }

  std::string name() const override { return "erlangc"; }
  std::string params_str() const override { return p_.str(); }
  double delta() const override { return delta_; }
  double center() const override { return p_.R(); }
  Interval density_support() const override { return {-kInf, kInf}; }
  double chain_left_edge() const override { return -sqrtR_; }
  int max_moment() const override { return 2; }

  double moment(int k, double x) const override {
    if (k == 1) return -p_.mu * std::min(x, beta_);
    if (k == 2) return 2.0 * p_.mu - delta_ * moment(1, std::max(-sqrtR_, x));
    throw UnsupportedError("erlangc: jump moments defined only for k <= 2");
  }

  Jet2 moment_jet(int k, double x) const override {
    if (k == 1) {
      if (x <= beta_) return {-p_.mu * x, -p_.mu, 0.0};
      return {-p_.mu * beta_, 0.0, 0.0};
    }
    if (k == 2) {
      if (x <= -sqrtR_) return {2.0 * p_.mu - delta_ * p_.mu * sqrtR_, 0.0, 0.0};
      Jet2 b = moment_jet(1, x);
      return {2.0 * p_.mu - delta_ * b.v, -delta_ * b.d1, -delta_ * b.d2};
    }
    throw UnsupportedError("erlangc: jump moments defined only for k <= 2");
  }

  std::vector<double> kinks() const override { return {-sqrtR_, beta_}; }

 private:
  ErlangCParams p_;
  double sqrtR_, beta_, delta_;
};

// ---------------------------------------------------------------------------
// Hospital model

class HospitalModel final : public ChainModel {
 public:
  explicit HospitalModel(const HospitalParams& p) : p_(p) {
    p_.validate();
    delta_ = p_.delta();
    lam_ = p_.Lambda();
    edge_ = -delta_ * p_.N;  // = -sqrt(N)
  }

  std::string name() const override { return "hospital"; }
  std::string params_str() const override { return p_.str(); }
  double delta() const override { return delta_; }
  double center() const override { return static_cast<double>(p_.N); }
  Interval density_support() const override { return {-kInf, kInf}; }
  double chain_left_edge() const override { return edge_; }
  int max_moment() const override { return 5; }

  double moment(int k, double x) const override { return moment_jet(k, x).v; }

  Jet2 moment_jet(int k, double x) const override {
    if (k < 1 || k > 5) throw UnsupportedError("hospital: jump moments defined for k in 1..5");
    if (k == 1) {
      // Drift b(x) = delta*(x^- - beta); the linear extension is kept
      // below the support edge (no clamp) so the diffusion's left tail
      // matches the chain's Gaussian-like decay.
      if (x <= 0.0) return {delta_ * (-x - p_.beta), -delta_, 0.0};
      return {-delta_ * p_.beta, 0.0, 0.0};
    }
    // Number of busy servers m = clamp(x/delta + N, 0, N); cumulants of
    // A - D with A ~ Poisson(Lambda), D ~ Binomial(m, mu), summed by
    // independence and converted to raw moments.
    Jet2 m{0.0, 0.0, 0.0};
    if (x > edge_ && x <= 0.0)
      m = {x / delta_ + p_.N, 1.0 / delta_, 0.0};
    else if (x > 0.0)
      m = {static_cast<double>(p_.N), 0.0, 0.0};
    const double p = p_.mu(), q = 1.0 - p;
    const Jet2 k1 = Jet2::constant(lam_) - m * p;
    const Jet2 k2 = Jet2::constant(lam_) + m * (p * q);
    const Jet2 k3 = Jet2::constant(lam_) - m * (p * q * (1.0 - 2.0 * p));
    const Jet2 k4 = Jet2::constant(lam_) + m * (p * q * (1.0 - 6.0 * p * q));
    const Jet2 k5 = Jet2::constant(lam_) - m * (p * q * (1.0 - 2.0 * p) * (1.0 - 12.0 * p * q));
    Jet2 raw;
    switch (k) {
      case 2: raw = k2 + k1 * k1; break;
      case 3: raw = k3 + 3.0 * (k2 * k1) + k1 * k1 * k1; break;
      case 4:
        raw = k4 + 4.0 * (k3 * k1) + 3.0 * (k2 * k2) + 6.0 * (k2 * k1 * k1) + k1 * k1 * k1 * k1;
        break;
      default:
        raw = k5 + 5.0 * (k4 * k1) + 10.0 * (k3 * k2) + 10.0 * (k3 * k1 * k1) +
              15.0 * (k2 * k2 * k1) + 10.0 * (k2 * k1 * k1 * k1) + k1 * k1 * k1 * k1 * k1;
        break;
    }
    double scale = 1.0;
    for (int i = 0; i < k; ++i) scale *= delta_;
    return scale * raw;
  }

  std::vector<double> kinks() const override { return {edge_, 0.0}; }

 private:
  HospitalParams p_;
  double delta_, lam_, edge_;
};

// ---------------------------------------------------------------------------
// AR(1) model

class AR1Model final : public ChainModel {
 public:
  explicit AR1Model(const AR1Params& p) : p_(p) {
    p_.validate();
    delta_ = p_.delta();
    for (int k = 1; k <= 5; ++k) {
      poly_.push_back(ar1_moment_poly(p_, k));
      double s = 1.0;
      for (int i = 0; i < k; ++i) s *= delta_;
      scale_.push_back(s);
    }
  }

  std::string name() const override { return "ar1"; }
  std::string params_str() const override { return p_.str(); }
  double delta() const override { return delta_; }
  double center() const override { return p_.R(); }
  Interval density_support() const override { return {-1.0 / delta_, kInf}; }
  double chain_left_edge() const override { return -1.0 / delta_; }
  int max_moment() const override { return 5; }

  double moment(int k, double x) const override {
    check(k);
    return scale_[k - 1] * poly_[k - 1](x);
  }

  Jet2 moment_jet(int k, double x) const override {
    check(k);
    return scale_[k - 1] * poly_[k - 1].jet(x);
  }

  std::vector<double> kinks() const override { return {}; }

 private:
  static void check(int k) {
    if (k < 1 || k > 5) throw UnsupportedError("ar1: jump moments defined for k in 1..5");
  }
  AR1Params p_;
  double delta_;
  std::vector<Poly> poly_;
  std::vector<double> scale_;
};

}  // namespace

std::unique_ptr<ChainModel> make_erlangc_model(const ErlangCParams& p) {
  return std::make_unique<ErlangCModel>(p);
}
std::unique_ptr<ChainModel> make_hospital_model(const HospitalParams& p) {
  return std::make_unique<HospitalModel>(p);
}
std::unique_ptr<ChainModel> make_ar1_model(const AR1Params& p) {
  return std::make_unique<AR1Model>(p);
}

double PolynomialModel::moment(int k, double x) const {
  if (k < 1 || k > max_moment()) throw UnsupportedError("poly model: moment order out of range");
  return moments_[static_cast<std::size_t>(k - 1)](x);
}

Jet2 PolynomialModel::moment_jet(int k, double x) const {
  if (k < 1 || k > max_moment()) throw UnsupportedError("poly model: moment order out of range");
  return moments_[static_cast<std::size_t>(k - 1)].jet(x);
}

Poly ar1_moment_poly(const AR1Params& p, int k) {
  p.validate();
  const Poly base({1.0, std::sqrt(p.alpha)});  // 1 + x*sqrt(alpha)
  Poly acc = Poly::constant(1.0);
  Poly cur = Poly::constant(1.0);
  double prod = 1.0;
  double sign = 1.0;
  for (int i = 1; i <= k; ++i) {
    cur = cur * base;
    prod /= (1.0 + i * p.alpha);
    sign = -sign;
    acc = acc + cur * (sign * prod);
  }
  double kfact = 1.0;
  for (int i = 2; i <= k; ++i) kfact *= i;
  return acc * kfact;
}

double find_drift_zero(const ChainModel& model, double tol) {
  const Interval sup = model.density_support();
  auto b = [&](double x) { return model.drift(x); };
  // Expand a bracket around 0 on the nonincreasing drift.
  double lo = std::max(sup.lo, -1.0), hi = std::min(sup.hi, 1.0);
  if (std::isfinite(sup.lo)) lo = std::max(sup.lo + 1e-12 * (1.0 + std::abs(sup.lo)), lo);
  int guard = 0;
  while (b(lo) <= 0.0 && guard++ < 80) {
    double next = lo - 2.0 * (hi - lo);
    if (next <= sup.lo) next = 0.5 * (lo + sup.lo);
    if (next == lo) break;
    lo = next;
  }
  guard = 0;
  while (b(hi) >= 0.0 && guard++ < 80) {
    if (b(hi) == 0.0 && b(hi + 1e-6 * (1.0 + std::abs(hi))) < 0.0) break;
    hi = hi + 2.0 * (hi - lo);
  }
  double blo = b(lo), bhi = b(hi);
  if (blo == 0.0) return lo;
  if (bhi == 0.0) return hi;
  if (blo < 0.0 || bhi > 0.0) throw NoEquilibriumError("drift has no sign change on the support");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double bm = b(mid);
    if (bm > 0.0)
      lo = mid;
    else if (bm < 0.0)
      hi = mid;
    else
      return mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Reference distributions

LatticeDistribution erlangc_reference(const ErlangCParams& p) {
  p.validate();
  const double R = p.R(), rho = p.rho(), delta = p.delta();
  const double log_ratio_tail = std::log(rho);  // constant for k >= n
  std::vector<double> logpi;
  logpi.push_back(0.0);
  double logmax = 0.0;
  // Stop once the geometric tail bound drops below 1e-14 of the peak.
  const double cutoff = std::log(1e-14 * (1.0 - rho));
  for (int k = 0;; ++k) {
    const double lr = std::log(p.lambda / (p.mu * std::min(k + 1, p.n)));
    logpi.push_back(logpi.back() + lr);
    logmax = std::max(logmax, logpi.back());
    if (k + 1 >= p.n && logpi.back() - logmax < cutoff) break;
    if (k > 50'000'000) throw UnstableError("erlangc: pmf recursion failed to terminate");
  }
  (void)log_ratio_tail;
  std::vector<double> atoms(logpi.size()), probs(logpi.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logpi.size(); ++k) {
    probs[k] = std::exp(logpi[k] - logmax);
    sum += probs[k];
    atoms[k] = delta * (static_cast<double>(k) - R);
  }
  for (auto& q : probs) q /= sum;
  return LatticeDistribution::from_pmf(std::move(atoms), std::move(probs), "erlangc", p.str());
}

namespace {

// One dense stationary solve of the truncated hospital DTMC.
// Returns false if the truncation looks too small.
bool hospital_solve(const HospitalParams& p, int M, double tail_eps,
                    std::vector<double>& pi_out) {
  const double mu = p.mu(), lam = p.Lambda();
  // Poisson pmf with negligible (<= 1e-18 relative) truncated tail.
  int Amax = static_cast<int>(std::ceil(lam + 14.0 * std::sqrt(lam) + 30.0));
  std::vector<double> apmf(static_cast<std::size_t>(Amax) + 1);
  apmf[0] = std::exp(-lam);
  for (int a = 1; a <= Amax; ++a) apmf[a] = apmf[a - 1] * lam / a;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M + 1, M + 1);
  // q holds the pmf of A - D(m), index i <-> jump s = i - m.
  std::vector<double> q(apmf);
  for (int k = 0; k <= M; ++k) {
    const int m = std::min(k, p.N);
    if (k > 0 && k <= p.N) {
      // One more busy server: convolve with an extra Bernoulli departure.
      std::vector<double> nq(q.size() + 1, 0.0);
      for (std::size_t i = 0; i < q.size(); ++i) {
        nq[i + 1] += (1.0 - mu) * q[i];
        nq[i] += mu * q[i];
      }
      q.swap(nq);
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
      const int s = static_cast<int>(i) - m;
      int j = k + s;
      if (j < 0) continue;  // cannot happen: D <= k
      if (j > M) j = M;     // lump the truncated overflow at the boundary
      A(j, k) += q[i];
    }
  }
  for (int k = 0; k <= M; ++k) A(k, k) -= 1.0;
  A.row(0).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M + 1);
  rhs(0) = 1.0;
  Eigen::VectorXd pi = A.partialPivLu().solve(rhs);

  pi_out.assign(pi.data(), pi.data() + pi.size());
  for (auto& v : pi_out) v = std::max(v, 0.0);
  const double total = std::accumulate(pi_out.begin(), pi_out.end(), 0.0);
  if (!(total > 0.0)) return false;
  for (auto& v : pi_out) v /= total;
  // Truncation check: the top band must carry less than tail_eps.
  const int band = std::max(4, static_cast<int>(std::ceil(3.0 * std::sqrt(double(p.N)))));
  double top = 0.0;
  for (int k = std::max(0, M - band); k <= M; ++k) top += pi_out[static_cast<std::size_t>(k)];
  return top < tail_eps;
}

}  // namespace

LatticeDistribution hospital_reference(const HospitalParams& p, double tail_eps) {
  p.validate();
  if (!(tail_eps > 0.0 && tail_eps <= 1e-6))
    throw std::invalid_argument("hospital_reference: tail_eps must lie in (0, 1e-6]");
  const double sqrtN = std::sqrt(static_cast<double>(p.N));
  const double lam = p.Lambda();
  double margin = sqrtN * (std::log(1.0 / (tail_eps * p.beta)) + 5.0) / p.beta;
  margin += lam + 14.0 * std::sqrt(lam) + 40.0;
  std::vector<double> pi;
  for (int attempt = 0; attempt < 3; ++attempt) {
    const int M = p.N + static_cast<int>(std::ceil(margin));
    if (hospital_solve(p, M, tail_eps, pi)) {
      const double delta = p.delta();
      std::vector<double> atoms(pi.size());
      for (std::size_t k = 0; k < pi.size(); ++k)
        atoms[k] = delta * (static_cast<double>(k) - p.N);
      return LatticeDistribution::from_pmf(std::move(atoms), std::move(pi), "hospital", p.str());
    }
    margin *= 2.0;
  }
  throw TruncationTooSmallError("hospital_reference: state-space truncation too small");
}

LatticeDistribution ar1_reference(const AR1Params& p, std::int64_t n_samples,
                                  std::uint64_t seed) {
  p.validate();
  if (n_samples < 10'000) throw std::invalid_argument("ar1_reference: need at least 1e4 samples");
  const double alpha = p.alpha;
  const double sqrt_alpha = std::sqrt(alpha);
  const double inv_alpha = 1.0 / alpha;
  constexpr int kChunks = 64;
  constexpr double kWeightFloor = 1e-12;
  std::vector<double> draws(static_cast<std::size_t>(n_samples));
  const std::int64_t per = (n_samples + kChunks - 1) / kChunks;
  for (int c = 0; c < kChunks; ++c) {
    const std::int64_t lo = c * per;
    const std::int64_t hi = std::min(n_samples, lo + per);
    if (lo >= hi) break;
    Rng rng(seed, static_cast<std::uint64_t>(c));
    for (std::int64_t i = lo; i < hi; ++i) {
      double d = rng.exponential();  // X_0 with unit weight
      double w = 1.0;
      for (;;) {
        w *= exp_neg(-alpha * rng.exponential());
        if (w < kWeightFloor) break;
        d += w * rng.exponential();
      }
      draws[static_cast<std::size_t>(i)] = sqrt_alpha * (d - inv_alpha);
    }
  }
  return LatticeDistribution::from_samples(std::move(draws), seed, "ar1", p.str());
}

double erlang_c_delay_probability(double R, int n) {
  // Stable Erlang-B recursion, then the B-to-C conversion.
  double B = 1.0;
  for (int k = 1; k <= n; ++k) B = R * B / (k + R * B);
  return n * B / (n - R * (1.0 - B));
}

}  // namespace vndiff
