#pragma once

#include <cmath>
#include <cstdint>

namespace vndiff {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ with splitmix64 seeding. Streams are derived from
// (seed, stream) so Monte Carlo output is independent of how work is
// split across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed ^ (0xd1342543de82ef95ULL * (stream + 1));
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0,1]; never returns 0 so -log is safe.
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }
  // Uniform on [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double exponential();  // Exp(1) via ziggurat

  int poisson(double lambda) {
    // Knuth product method; adequate for the moderate rates used here.
    if (lambda > 30.0) {
      int k = poisson(lambda / 2);
      return k + poisson(lambda - lambda / 2);
    }
    const double limit = std::exp(-lambda);
    double prod = uniform_pos();
    int k = 0;
    while (prod > limit) {
      prod *= uniform_pos();
      ++k;
    }
    return k;
  }

  int binomial(int n, double p) {
    int k = 0;
    for (int i = 0; i < n; ++i) k += (uniform() < p) ? 1 : 0;
    return k;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

namespace detail {

// exp(x) for x in (-37, 0] via a 1/32-step table and a short Taylor tail;
// relative error a few ulp. Falls back to std::exp outside the domain.
struct ExpNegTable {
  static constexpr int kMax = 1185;  // covers x > -37.03125
  double t[kMax];
  ExpNegTable() {
    for (int i = 0; i < kMax; ++i) t[i] = std::exp(-static_cast<double>(i) / 32.0);
  }
};

inline const ExpNegTable& exp_neg_table() {
  static const ExpNegTable t;
  return t;
}

struct ExpZiggurat {
  static constexpr int kLayers = 256;
  double X[kLayers + 1];
  double Y[kLayers + 1];  // Y[i] = exp(-X[i])

  ExpZiggurat() {
    const double R = 7.69711747013104972;
    const double V = 3.949659822581572e-3;
    X[1] = R;
    X[0] = V * std::exp(R);  // pseudo-width of the base layer
    double y = std::exp(-R);
    for (int i = 1; i < kLayers; ++i) {
      y += V / X[i];
      X[i + 1] = (y >= 1.0) ? 0.0 : -std::log(y);
    }
    X[kLayers] = 0.0;
    for (int i = 0; i <= kLayers; ++i) Y[i] = std::exp(-X[i]);
  }
};

inline const ExpZiggurat& exp_zig() {
  static const ExpZiggurat z;
  return z;
}

}  // namespace detail

inline double exp_neg(double x) {
  if (x <= -37.0) return std::exp(x);
  const int n = static_cast<int>(-x * 32.0);  // floor for x <= 0
  const double r = x + static_cast<double>(n) / 32.0;  // r in (-1/32, 0]
  // Taylor to r^7: remainder below 1e-16 relative on this range.
  const double p =
      1.0 + r * (1.0 + r * (0.5 + r * (1.0 / 6.0 +
                 r * (1.0 / 24.0 + r * (1.0 / 120.0 + r * (1.0 / 720.0 + r / 5040.0))))));
  return detail::exp_neg_table().t[n] * p;
}

inline double Rng::exponential() {
  const auto& z = detail::exp_zig();
  for (;;) {
    const std::uint64_t u = next_u64();
    const int i = static_cast<int>(u & 255);
    const double x = static_cast<double>(u >> 11) * 0x1.0p-53 * z.X[i];
    if (x < z.X[i + 1]) return x;
    if (i == 0) return z.X[1] - std::log(uniform_pos());  // tail, memoryless
    const double y = z.Y[i] + uniform() * (z.Y[i + 1] - z.Y[i]);
    if (y < std::exp(-x)) return x;
  }
}

}  // namespace vndiff
