#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace htlab {

// Operation tags for derived streams. Every randomized operation draws from a
// stream keyed by (master seed, operation, block); results are therefore
// independent of worker count and scheduling.
enum class StreamOp : std::uint64_t {
  Lyapunov = 1,
  KEstimate = 2,
  KResample = 3,
  ChiSolve = 4,
  DirectionMeasure = 5,
  Backward = 6,
  Orbit = 7,
  Stationarity = 8,
  Projections = 9,
  Mellin = 10,
  InitDirections = 11,
  Misc = 12,
};

std::uint64_t splitmix64_next(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t op, std::uint64_t block);

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream derived(std::uint64_t master, StreamOp op, std::uint64_t block) {
    return RngStream(derive_seed(master, static_cast<std::uint64_t>(op), block));
  }

  std::uint64_t next_u64() { return engine_(); }

  // uniform on [0,1), 53-bit resolution
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // uniform on (0,1]
  double uniform_pos() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

  double normal();

  // uniform on the unit sphere; d == 1 yields +1 or -1
  Eigen::VectorXd unit_vector(int d);

 private:
  std::mt19937_64 engine_;
};

}  // namespace htlab
