#include "vndiff/density.hpp"

#include <algorithm>
#include <cmath>

#include "vndiff/errors.hpp"
#include "vndiff/quadrature.hpp"

namespace vndiff {

namespace {

constexpr std::size_t kMaxNodes = 400'000;

double apply_h(HTag h, double param, double x) {
  switch (h) {
    case HTag::Identity: return x;
    case HTag::One: return 1.0;
    case HTag::PositivePartShift: return std::max(x - param, 0.0);
    case HTag::LogShift: return std::log(std::max(x + param, 1e-300));
    case HTag::IndicatorGeq: return x >= param ? 1.0 : 0.0;
    case HTag::IndicatorLeq: return x <= param ? 1.0 : 0.0;
  }
  return 0.0;
}

}  // namespace

StationaryDensity build_density(std::function<double(double)> b, CoefficientFn v,
                                Interval support, const DensityOptions& opt) {
  StationaryDensity d;
  d.b_ = std::move(b);
  d.v_ = std::move(v);
  d.opt_ = opt;

  auto vf = [&d](double x) {
    const double val = d.v_(x);
    if (!(val > 0.0)) throw NonPositiveVError("density: coefficient not positive at x=" + std::to_string(x));
    return val;
  };
  auto slope = [&](double x) { return d.b_(x) / vf(x); };

  if (!(support.lo < 0.0 && support.hi > 0.0))
    throw std::invalid_argument("density: exponent anchor 0 must lie inside the support");

  // Breakpoints the walk must land on exactly.
  std::vector<double> brk = d.v_.kinks;
  brk.insert(brk.end(), opt.extra_breakpoints.begin(), opt.extra_breakpoints.end());
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end()), brk.end());

  const double cut = opt.tail_log_cut;
  auto step_size = [&](double x) {
    const double s = std::abs(slope(x));
    double h = 0.5 / (s + 1e-3 / (1.0 + std::abs(x)));
    return std::min(h, 0.25 * (1.0 + std::abs(x)));
  };

  // Walk one direction from the anchor, appending nodes and exponents.
  // Returns true when the walk ended on a hard support boundary.
  auto walk = [&](double dir, std::vector<double>& xs, std::vector<double>& es) {
    double x = 0.0, e = 0.0, runmax = 0.0;
    const double limit = dir > 0 ? support.hi : support.lo;
    for (;;) {
      double h = step_size(x);
      double x2 = x + dir * h;
      // Clip to the next breakpoint in the walk direction.
      if (dir > 0) {
        auto it = std::upper_bound(brk.begin(), brk.end(), x + 1e-15 * (1.0 + std::abs(x)));
        if (it != brk.end() && *it < x2) x2 = *it;
      } else {
        auto it = std::lower_bound(brk.begin(), brk.end(), x - 1e-15 * (1.0 + std::abs(x)));
        if (it != brk.begin() && *(--it) > x2) x2 = *it;
      }
      bool at_end = false;
      if (std::isfinite(limit) && (dir > 0 ? x2 >= limit : x2 <= limit)) {
        x2 = limit;
        at_end = true;
      }
      const double de = integrate([&](double t) { return slope(t); }, x, x2, 1e-12, 1e-300);
      e += de;
      xs.push_back(x2);
      es.push_back(e);
      runmax = std::max(runmax, e);
      if (at_end) return true;
      if (e - runmax < cut) return false;
      if (xs.size() > kMaxNodes || std::abs(x2) > 1e12)
        throw DivergentError("density: exponent fails to decay toward " +
                             std::string(dir > 0 ? "+inf" : "-inf") + " (kappa = inf?)");
      x = x2;
    }
  };

  std::vector<double> xr, er, xl, el;
  d.right_hard_ = walk(+1.0, xr, er);
  d.left_hard_ = walk(-1.0, xl, el);

  d.node_.reserve(xl.size() + xr.size() + 1);
  d.expo_.reserve(xl.size() + xr.size() + 1);
  for (std::size_t i = xl.size(); i-- > 0;) {
    d.node_.push_back(xl[i]);
    d.expo_.push_back(el[i]);
  }
  d.node_.push_back(0.0);
  d.expo_.push_back(0.0);
  d.node_.insert(d.node_.end(), xr.begin(), xr.end());
  d.expo_.insert(d.expo_.end(), er.begin(), er.end());

  d.emax_ = *std::max_element(d.expo_.begin(), d.expo_.end());

  const std::size_t m = d.node_.size() - 1;
  d.cellmass_.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    d.cellmass_[i] = d.partial_mass(i, d.node_[i], d.node_[i + 1]);

  d.prefix_.resize(m);
  d.suffix_.resize(m);
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) d.prefix_[i] = (acc += d.cellmass_[i]);
  acc = 0.0;
  for (std::size_t i = m; i-- > 0;) d.suffix_[i] = (acc += d.cellmass_[i]);
  d.total_ = d.prefix_.back();
  if (!(d.total_ > 0.0) || !std::isfinite(d.total_))
    throw DivergentError("density: normalizing integral not finite and positive");
  return d;
}

StationaryDensity build_model_density(const ChainModel& model, CoefficientFn v,
                                      const DensityOptions& opt) {
  DensityOptions o = opt;
  auto mk = model.kinks();
  o.extra_breakpoints.insert(o.extra_breakpoints.end(), mk.begin(), mk.end());
  const ChainModel* m = &model;
  return build_density([m](double x) { return m->drift(x); }, std::move(v),
                       model.density_support(), o);
}

double StationaryDensity::exponent_from_node(std::size_t i, double x) const {
  return expo_[i] +
         integrate([this](double t) { return b_(t) / v_(t); }, node_[i], x, 1e-12, 1e-300);
}

// Unnormalized mass of [a,b] within cell i: int exp(E-Emax)/v, with the
// exponent carried from the cell's left node by adaptive quadrature.
double StationaryDensity::partial_mass(std::size_t i, double a, double b) const {
  if (!(b > a)) return 0.0;
  const double ea = exponent_from_node(i, a);
  auto integrand = [&](double x) {
    const double e = ea + integrate([this](double t) { return b_(t) / v_(t); }, a, x, 1e-12, 1e-300);
    return std::exp(e - emax_) / v_(x);
  };
  return integrate(integrand, a, b, opt_.tol * 1e-2, 1e-320);
}

std::size_t StationaryDensity::locate(double x) const {
  auto it = std::upper_bound(node_.begin(), node_.end(), x);
  std::size_t idx = static_cast<std::size_t>(it - node_.begin());
  if (idx == 0) return 0;
  if (idx >= node_.size()) return node_.size() - 2;
  return idx - 1;
}

double StationaryDensity::pdf(double x) const {
  if (x <= node_.front() || x >= node_.back()) return 0.0;
  const std::size_t i = locate(x);
  const double e = exponent_from_node(i, x);
  return std::exp(e - emax_) / v_(x) / total_;
}

double StationaryDensity::exponent(double x) const {
  if (x < node_.front() || x > node_.back()) return -kInf;
  const std::size_t i = locate(x);
  return exponent_from_node(i, x);
}

double StationaryDensity::log_kappa() const { return -(std::log(total_) + emax_); }

double StationaryDensity::cdf(double x) const {
  if (x <= node_.front()) return 0.0;
  if (x >= node_.back()) return 1.0;
  const std::size_t i = locate(x);
  const double before = (i == 0) ? 0.0 : prefix_[i - 1];
  return (before + partial_mass(i, node_[i], x)) / total_;
}

double StationaryDensity::ccdf(double x) const {
  if (x <= node_.front()) return 1.0;
  if (x >= node_.back()) return 0.0;
  const std::size_t i = locate(x);
  const double after = (i + 1 < cellmass_.size() + 1 && i + 1 <= suffix_.size() - 1)
                           ? ((i + 1 < suffix_.size()) ? suffix_[i + 1] : 0.0)
                           : 0.0;
  return (after + partial_mass(i, x, node_[i + 1])) / total_;
}

double StationaryDensity::log_unnorm_cdf(double x) const {
  if (x <= node_.front()) return -kInf;
  const double c = std::min(cdf(x), 1.0);
  return std::log(c * total_) + emax_;
}

double StationaryDensity::log_unnorm_ccdf(double x) const {
  if (x >= node_.back()) return -kInf;
  const double c = std::min(ccdf(x), 1.0);
  return std::log(c * total_) + emax_;
}

double StationaryDensity::quantile(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile: q must lie in (0,1)");
  double lo = node_.front(), hi = node_.back();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double c = cdf(mid);
    if (std::abs(c - q) < 1e-10 && it > 20) return mid;
    if (c < q)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15 * (1.0 + std::abs(lo))) break;
  }
  return 0.5 * (lo + hi);
}

double StationaryDensity::moment(HTag h, double param) const {
  if (h == HTag::IndicatorGeq) return ccdf(param);
  if (h == HTag::IndicatorLeq) return cdf(param);

  // Split cells at the kink of (x-param)^+ when it falls inside.
  double total = 0.0;
  const std::size_t m = cellmass_.size();
  for (std::size_t i = 0; i < m; ++i) {
    double a = node_[i], bx = node_[i + 1];
    const double ea = expo_[i];
    auto cell_int = [&](double lo, double hi) {
      if (!(hi > lo)) return 0.0;
      auto integrand = [&](double x) {
        const double e =
            ea + integrate([this](double t) { return b_(t) / v_(t); }, a, x, 1e-12, 1e-300);
        return apply_h(h, param, x) * std::exp(e - emax_) / v_(x);
      };
      return integrate(integrand, lo, hi, opt_.tol * 1e-2, opt_.tol * 1e-6 * total_);
    };
    if (h == HTag::PositivePartShift && param > a && param < bx) {
      total += cell_int(param, bx);  // left part vanishes
    } else if (h == HTag::PositivePartShift && param >= bx) {
      // entire cell below the kink: contributes zero
    } else {
      total += cell_int(a, bx);
    }
  }

  // Integrability guard: at edges produced by tail truncation (not hard
  // support boundaries) the integrand must be negligible.
  if (h == HTag::Identity || h == HTag::LogShift) {
    double edge = 0.0;
    if (!right_hard_) edge += std::abs(apply_h(h, param, node_.back())) * cellmass_.back();
    if (!left_hard_)
      edge += std::abs(apply_h(h, param, node_.front() + 1e-12 * (1.0 + std::abs(node_.front())))) *
              cellmass_.front();
    if (edge > 1e-6 * (std::abs(total) + 1.0) * total_)
      throw NonIntegrableError("density moment: integrand not negligible at truncation edges");
  }
  return total / total_;
}

std::vector<StationaryDensity::Row> StationaryDensity::tabulate(std::size_t max_rows) const {
  std::vector<Row> rows;
  const std::size_t m = node_.size();
  const std::size_t stride = std::max<std::size_t>(1, m / max_rows);
  double acc = 0.0;
  std::size_t last_cell = 0;
  for (std::size_t i = 0; i < m; i += stride) {
    while (last_cell < i) acc += cellmass_[last_cell++];
    const double x = node_[i];
    rows.push_back({x, std::exp(expo_[i] - emax_) / v_(x) / total_, acc / total_});
  }
  if ((m - 1) % stride != 0) {
    while (last_cell < m - 1) acc += cellmass_[last_cell++];
    rows.push_back({node_.back(), std::exp(expo_.back() - emax_) / v_(node_.back()) / total_,
                    acc / total_});
  }
  return rows;
}

}  // namespace vndiff
