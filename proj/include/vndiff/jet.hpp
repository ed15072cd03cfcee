#pragma once

namespace vndiff {

// Second-order Taylor jet: carries f, f', f'' through arithmetic so
// ratio derivatives like (c/a)' and (c/a)'' come out exact when the
// seeds are exact.
struct Jet2 {
  double v = 0, d1 = 0, d2 = 0;

  static Jet2 constant(double c) { return {c, 0, 0}; }
  static Jet2 variable(double x) { return {x, 1, 0}; }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}
inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}
inline Jet2 operator-(const Jet2& a) { return {-a.v, -a.d1, -a.d2}; }
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1,
          a.d2 * b.v + 2 * a.d1 * b.d1 + a.v * b.d2};
}
inline Jet2 operator*(double s, const Jet2& a) { return {s * a.v, s * a.d1, s * a.d2}; }
inline Jet2 operator*(const Jet2& a, double s) { return s * a; }
inline Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double q = a.v / b.v;
  const double q1 = (a.d1 - q * b.d1) / b.v;
  const double q2 = (a.d2 - 2 * q1 * b.d1 - q * b.d2) / b.v;
  return {q, q1, q2};
}
inline Jet2 operator/(const Jet2& a, double s) { return {a.v / s, a.d1 / s, a.d2 / s}; }
inline Jet2 operator+(const Jet2& a, double s) { return {a.v + s, a.d1, a.d2}; }
inline Jet2 operator+(double s, const Jet2& a) { return a + s; }
inline Jet2 operator-(const Jet2& a, double s) { return {a.v - s, a.d1, a.d2}; }

}  // namespace vndiff
