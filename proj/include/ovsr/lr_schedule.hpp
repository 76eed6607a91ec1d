#pragma once

#include <cstdint>
#include <stdexcept>

namespace ovsr {

// Linear decay from `initial` to `plateau` over [0, decay_end], constant until
// the first step drop, then piecewise-constant drops. All iteration knots are
// multiplied by `time_scale` so short runs keep the same shape.
struct LrSchedule {
  double initial = 1e-3;
  double plateau = 1e-4;
  double decay_end = 120'000;
  double plateau_end = 200'000;
  double drop1 = 5e-5;
  double drop1_at = 250'000;
  double drop2 = 1e-5;
  double drop2_at = 300'000;
  double time_scale = 1.0;

  void validate() const {
    if (!(time_scale > 0)) throw std::invalid_argument("lr time_scale must be positive");
    if (!(decay_end > 0 && decay_end <= plateau_end && plateau_end <= drop1_at && drop1_at <= drop2_at)) {
      throw std::invalid_argument("lr knots must be increasing");
    }
    if (!(initial >= plateau && plateau >= drop1 && drop1 >= drop2 && drop2 >= 0)) {
      throw std::invalid_argument("lr values must be non-increasing");
    }
  }

  // Rescales the knots so that the last drop lands on `iterations`.
  static LrSchedule for_run(std::int64_t iterations) {
    LrSchedule s;
    s.time_scale = static_cast<double>(iterations) / s.drop2_at;
    return s;
  }
};

inline double lr_at(std::int64_t iteration, const LrSchedule& s) {
  if (iteration < 0) throw std::invalid_argument("iteration must be >= 0");
  const double it = static_cast<double>(iteration);
  const double k = s.time_scale;
  if (it >= s.drop2_at * k) return s.drop2;
  if (it >= s.drop1_at * k) return s.drop1;
  if (it >= s.decay_end * k) return s.plateau;
  return s.initial + (s.plateau - s.initial) * (it / (s.decay_end * k));
}

}  // namespace ovsr
