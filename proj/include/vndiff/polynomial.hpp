#pragma once

#include <cstddef>
#include <vector>

#include "vndiff/jet.hpp"

namespace vndiff {

// Dense polynomial with double coefficients, ascending powers.
class Poly {
 public:
  Poly() : c_{0.0} {}
  explicit Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) c_.push_back(0.0);
  }
  static Poly constant(double v) { return Poly({v}); }

  const std::vector<double>& coeffs() const { return c_; }
  std::size_t degree() const { return c_.size() - 1; }

  double operator()(double x) const {
    double r = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) r = r * x + c_[i];
    return r;
  }

  Poly deriv() const {
    if (c_.size() == 1) return Poly();
    std::vector<double> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
    return Poly(std::move(d));
  }

  Jet2 jet(double x) const {
    // Horner for value, first and second derivative in one pass.
    double p = 0.0, dp = 0.0, d2p = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) {
      d2p = d2p * x + 2.0 * dp;
      dp = dp * x + p;
      p = p * x + c_[i];
    }
    return {p, dp, d2p};
  }

  Poly operator+(const Poly& o) const {
    std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
    for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
    return Poly(std::move(r));
  }
  Poly operator-(const Poly& o) const { return *this + (o * -1.0); }
  Poly operator*(const Poly& o) const {
    std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i)
      for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
    return Poly(std::move(r));
  }
  Poly operator*(double s) const {
    std::vector<double> r(c_);
    for (auto& v : r) v *= s;
    return Poly(std::move(r));
  }

 private:
  std::vector<double> c_;
};

}  // namespace vndiff
