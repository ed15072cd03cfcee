#include "vndiff/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "vndiff/errors.hpp"
#include "vndiff/quadrature.hpp"
#include "vndiff/rng.hpp"

namespace vndiff {

double kolmogorov(const LatticeDistribution& w, const StationaryDensity& y) {
  // F_Y is continuous, so the sup is attained at the reference atoms,
  // approaching from either side.
  double best = 0.0;
  const auto& xs = w.atoms();
  for (double x : xs) {
    const double fy = y.cdf(x);
    best = std::max(best, std::abs(fy - w.cdf(x)));
    best = std::max(best, std::abs(fy - w.cdf_left(x)));
  }
  return best;
}

double wasserstein1(const LatticeDistribution& w, const StationaryDensity& y) {
  const auto& xs = w.atoms();
  if (xs.empty()) throw std::invalid_argument("wasserstein1: empty reference");
  // Tails outside the reference range: int F_Y = E(x0 - Y)^+ on the left,
  // int (1 - F_Y) = E(Y - xK)^+ on the right.
  double total = y.moment(HTag::PositivePartShift, xs.back());
  {
    // E(x0 - Y)^+ = x0 - E Y + E(Y - x0)^+.
    total += xs.front() - y.mean() + y.moment(HTag::PositivePartShift, xs.front());
  }
  // Between consecutive atoms F_W is constant; split each cell at the
  // crossing with the monotone F_Y so the integrand stays smooth.
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double a = xs[i], b = xs[i + 1];
    if (!(b > a)) continue;
    const double fw = w.is_sample() ? (static_cast<double>(i + 1) / n) : w.cdf(a);
    const double fa = y.cdf(a), fb = y.cdf(b);
    auto seg = [&](double lo, double hi) {
      if (!(hi > lo)) return 0.0;
      return integrate([&](double x) { return std::abs(fw - y.cdf(x)); }, lo, hi, 1e-9,
                       1e-14 * (hi - lo));
    };
    if (fa < fw && fw < fb) {
      const double t = y.quantile(fw);
      total += seg(a, std::min(std::max(t, a), b));
      total += seg(std::min(std::max(t, a), b), b);
    } else {
      total += seg(a, b);
    }
  }
  return total;
}

std::vector<TailErrorPoint> relative_tail_error(const LatticeDistribution& w,
                                                const StationaryDensity& y,
                                                const std::vector<double>& z_list,
                                                TailSide side) {
  std::vector<TailErrorPoint> out;
  out.reserve(z_list.size());
  for (double z : z_list) {
    TailErrorPoint pt;
    pt.z = z;
    if (side == TailSide::Right) {
      pt.ref_tail = w.ccdf(z);
      pt.approx_tail = y.ccdf(z);
    } else {
      pt.ref_tail = w.cdf(-z);
      pt.approx_tail = y.cdf(-z);
    }
    if (pt.ref_tail <= 0.0)
      throw ZeroDenominatorError("relative_tail_error: reference tail vanishes at z=" +
                                 std::to_string(z));
    pt.rel_error = std::abs(pt.approx_tail / pt.ref_tail - 1.0);
    out.push_back(pt);
  }
  return out;
}

std::vector<double> default_z_grid(const LatticeDistribution& w, TailSide side, double p_floor,
                                   std::size_t max_points) {
  std::vector<double> zs;
  const auto& xs = w.atoms();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double z = (side == TailSide::Right) ? xs[i] : -xs[i];
    if (!(z > 0.0)) continue;
    const double tail = (side == TailSide::Right) ? w.ccdf(xs[i]) : w.cdf(xs[i]);
    if (tail >= p_floor && tail <= 0.5) zs.push_back(z);
  }
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
  if (zs.size() > max_points) {
    std::vector<double> thin;
    const double stride = static_cast<double>(zs.size() - 1) / static_cast<double>(max_points - 1);
    for (std::size_t i = 0; i < max_points; ++i)
      thin.push_back(zs[static_cast<std::size_t>(std::lround(i * stride))]);
    thin.erase(std::unique(thin.begin(), thin.end()), thin.end());
    zs = std::move(thin);
  }
  return zs;
}

ExpectationError expectation_error(const LatticeDistribution& w, const StationaryDensity& y,
                                   HTag h, double param) {
  auto hw = [&](double x) {
    switch (h) {
      case HTag::Identity: return x;
      case HTag::One: return 1.0;
      case HTag::PositivePartShift: return std::max(x - param, 0.0);
      case HTag::LogShift: return std::log(std::max(x + param, 1e-300));
      case HTag::IndicatorGeq: return x >= param ? 1.0 : 0.0;
      case HTag::IndicatorLeq: return x <= param ? 1.0 : 0.0;
    }
    return 0.0;
  };
  const double ew = w.mean_of(hw);
  const double ey = y.moment(h, param);
  ExpectationError e;
  e.absolute = std::abs(ew - ey);
  if (std::abs(ew) > 1e-8) e.relative = e.absolute / std::abs(ew);
  return e;
}

RateFit rate_fit(const std::vector<double>& scale, const std::vector<double>& error) {
  if (scale.size() != error.size() || scale.size() < 4)
    throw std::invalid_argument("rate_fit: need at least 4 (scale, error) pairs");
  const std::size_t n = scale.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(scale[i] > 0.0) || !(error[i] > 0.0))
      throw std::invalid_argument("rate_fit: scales and errors must be positive");
    lx[i] = std::log(scale[i]);
    ly[i] = std::log(error[i]);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = f.intercept + f.slope * lx[i];
    ss_res += (ly[i] - pred) * (ly[i] - pred);
  }
  f.r2 = (syy > 0) ? 1.0 - ss_res / syy : 1.0;
  return f;
}

BlockBootstrap::BlockBootstrap(const std::vector<double>& raw_samples, std::size_t n_blocks,
                               std::uint64_t seed)
    : raw_(raw_samples), n_blocks_(std::min(n_blocks, raw_samples.size())), seed_(seed) {}

std::size_t BlockBootstrap::add_sum(const std::function<double(double)>& f) {
  fns_.push_back(f);
  return fns_.size() - 1;
}

void BlockBootstrap::finalize() {
  const std::size_t n = raw_.size();
  block_sums_.assign(fns_.size(), std::vector<double>(n_blocks_, 0.0));
  block_count_.assign(n_blocks_, 0.0);
  const std::size_t per = (n + n_blocks_ - 1) / n_blocks_;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t blk = std::min(i / per, n_blocks_ - 1);
    block_count_[blk] += 1.0;
    for (std::size_t s = 0; s < fns_.size(); ++s) block_sums_[s][blk] += fns_[s](raw_[i]);
  }
  finalized_ = true;
}

std::vector<double> BlockBootstrap::observed_means() const {
  std::vector<double> means(fns_.size(), 0.0);
  double count = 0.0;
  for (double c : block_count_) count += c;
  for (std::size_t s = 0; s < fns_.size(); ++s) {
    double sum = 0.0;
    for (double v : block_sums_[s]) sum += v;
    means[s] = sum / count;
  }
  return means;
}

double BlockBootstrap::stderr_of(
    const std::function<double(const std::vector<double>&)>& stat, int resamples) const {
  if (!finalized_) throw std::logic_error("BlockBootstrap: finalize() before stderr_of");
  Rng rng(seed_, 0xb001u);
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(resamples));
  std::vector<double> means(fns_.size());
  for (int r = 0; r < resamples; ++r) {
    std::vector<double> sums(fns_.size(), 0.0);
    double count = 0.0;
    for (std::size_t b = 0; b < n_blocks_; ++b) {
      const std::size_t pick =
          static_cast<std::size_t>(rng.next_u64() % static_cast<std::uint64_t>(n_blocks_));
      count += block_count_[pick];
      for (std::size_t s = 0; s < fns_.size(); ++s) sums[s] += block_sums_[s][pick];
    }
    for (std::size_t s = 0; s < fns_.size(); ++s) means[s] = sums[s] / count;
    vals.push_back(stat(means));
  }
  double m = 0.0;
  for (double v : vals) m += v;
  m /= vals.size();
  double var = 0.0;
  for (double v : vals) var += (v - m) * (v - m);
  var /= (vals.size() > 1 ? vals.size() - 1 : 1);
  return std::sqrt(var);
}

}  // namespace vndiff
