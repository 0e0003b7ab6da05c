#ifndef MVST_RANDOM_HPP
#define MVST_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace mvst {

/// Seeded generator. Streams are reproducible for a given seed and standard
/// library build; nothing here is shared between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    // (0, 1): the gamma sampler takes logs of this.
    double u;
    do {
      u = std::generate_canonical<double, 53>(engine_);
    } while (u <= 0.0);
    return u;
  }

  double normal() { return normal_(engine_); }

  /// Gamma(shape, 1) by Marsaglia and Tsang; shape < 1 through the
  /// U^{1/shape} boost of a Gamma(shape + 1) draw.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double z, v;
      do {
        z = normal();
        v = 1.0 + c * z;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
      if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mvst

#endif  // MVST_RANDOM_HPP
