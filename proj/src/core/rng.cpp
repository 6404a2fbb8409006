#include "core/rng.hpp"

#include <cmath>
#include <numbers>

#include "core/error.hpp"

namespace htlab {

std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t op, std::uint64_t block) {
  std::uint64_t s = master;
  splitmix64_next(s);
  s ^= op * 0xA0761D6478BD642Full;
  splitmix64_next(s);
  s ^= block * 0xE7037ED1A0B428DBull;
  return splitmix64_next(s);
}

double RngStream::normal() {
  // Box-Muller; two fresh uniforms per call keeps the draw count fixed.
  const double u1 = uniform_pos();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd RngStream::unit_vector(int d) {
  if (d < 1) fail(Errc::InvalidArgument, "unit_vector: dimension must be >= 1");
  Eigen::VectorXd v(d);
  if (d == 1) {
    v(0) = uniform() < 0.5 ? 1.0 : -1.0;
    return v;
  }
  double norm = 0.0;
  do {
    for (int i = 0; i < d; ++i) v(i) = normal();
    norm = v.norm();
  } while (norm < 1e-300);
  v /= norm;
  return v;
}

}  // namespace htlab
