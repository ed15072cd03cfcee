#pragma once

#include <cmath>
#include <cstddef>

#include "vndiff/errors.hpp"

namespace vndiff {

namespace detail {

// Gauss-Kronrod 7-15 pair on [-1,1].
inline constexpr double kGK15Nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,
    0.741531185599394,  0.864864423359769,  0.949107912342759,
    0.991455371120813};
inline constexpr double kGK15Weights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529};
inline constexpr double kG7Weights[15] = {
    0.0, 0.129484966168870, 0.0, 0.279705391489277, 0.0,
    0.381830050505119, 0.0, 0.417959183673469, 0.0,
    0.381830050505119, 0.0, 0.279705391489277, 0.0,
    0.129484966168870, 0.0};

template <typename F>
void gk15(const F& f, double a, double b, double& kronrod, double& err) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double gauss = 0.0;
  kronrod = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double v = f(c + h * kGK15Nodes[i]);
    kronrod += kGK15Weights[i] * v;
    gauss += kG7Weights[i] * v;
  }
  kronrod *= h;
  gauss *= h;
  err = std::abs(kronrod - gauss);
}

template <typename F>
double integrate_rec(const F& f, double a, double b, double abs_tol, double rel_tol,
                     int depth) {
  double val, err;
  gk15(f, a, b, val, err);
  if (err <= abs_tol || err <= rel_tol * std::abs(val) || depth >= 52) return val;
  const double c = 0.5 * (a + b);
  return integrate_rec(f, a, c, 0.5 * abs_tol, rel_tol, depth + 1) +
         integrate_rec(f, c, b, 0.5 * abs_tol, rel_tol, depth + 1);
}

}  // namespace detail

// Adaptive Gauss-Kronrod on a finite interval. The error target is
// max(abs_tol, rel_tol * |I|) applied per panel, so small panels of a
// larger integral keep their relative accuracy.
template <typename F>
double integrate(const F& f, double a, double b, double rel_tol = 1e-11,
                 double abs_tol = 0.0) {
  if (a == b) return 0.0;
  return detail::integrate_rec(f, a, b, abs_tol, rel_tol, 0);
}

// Fixed 15-point Gauss-Legendre, no error control. Used for short,
// smooth sub-segments (e.g. exponent increments inside one cell).
template <typename F>
double integrate_gl15(const F& f, double a, double b) {
  static constexpr double kNodes[15] = {
      -0.987992518020485, -0.937273392400706, -0.848206583410427,
      -0.724417731360170, -0.570972172608539, -0.394151347077563,
      -0.201194093997435, 0.0,
      0.201194093997435,  0.394151347077563,  0.570972172608539,
      0.724417731360170,  0.848206583410427,  0.937273392400706,
      0.987992518020485};
  static constexpr double kWeights[15] = {
      0.030753241996117, 0.070366047488108, 0.107159220467172,
      0.139570677926154, 0.166269205816994, 0.186161000015562,
      0.198431485327112, 0.202578241925561,
      0.198431485327112, 0.186161000015562, 0.166269205816994,
      0.139570677926154, 0.107159220467172, 0.070366047488108,
      0.030753241996117};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 15; ++i) s += kWeights[i] * f(c + h * kNodes[i]);
  return s * h;
}

}  // namespace vndiff
