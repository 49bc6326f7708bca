#pragma once

// Per-pixel timestamp memory and linear-decay time-surfaces.
//
// A surface around event e has (2R+1) x (2R+1) x channels values. For every
// neighbour offset (dx, dy) and channel p the value is 1 - dt/tau when the
// neighbour's latest event on p happened dt < tau microseconds before e, and
// 0 otherwise (older, never fired, or outside the array).
//
// Surface layout is channel-major:
//   index = (p * side + (dy + R)) * side + (dx + R),  side = 2R + 1

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "evgest/error.hpp"
#include "evgest/event.hpp"

namespace evgest {

class TimestampMemory {
 public:
  static constexpr Timestamp kNever = std::numeric_limits<Timestamp>::max();

  explicit TimestampMemory(const SensorGeometry& geometry)
      : geometry_(geometry),
        stamps_(std::size_t{geometry.width} * geometry.height * geometry.channels, kNever) {
    check_geometry(geometry_);
  }

  const SensorGeometry& geometry() const { return geometry_; }

  void record(const Event& e) {
    if (!geometry_.contains(e)) {
      throw ContractError("timestamp memory: event " + describe(e) + " outside geometry");
    }
    Timestamp& slot = stamps_[flat(e.x, e.y, e.p)];
    if (slot != kNever && e.t < slot) {
      throw ContractError("timestamp memory: time regression at " + describe(e));
    }
    slot = e.t;
  }

  // Raw stamp, kNever when the pixel/channel never fired. No bounds check.
  Timestamp raw(std::uint32_t x, std::uint32_t y, std::uint32_t p) const { return stamps_[flat(x, y, p)]; }

  std::optional<Timestamp> last(std::uint32_t x, std::uint32_t y, std::uint32_t p) const {
    if (x >= geometry_.width || y >= geometry_.height || p >= geometry_.channels) return std::nullopt;
    Timestamp t = raw(x, y, p);
    if (t == kNever) return std::nullopt;
    return t;
  }

  void clear() { std::fill(stamps_.begin(), stamps_.end(), kNever); }

 private:
  std::size_t flat(std::uint32_t x, std::uint32_t y, std::uint32_t p) const {
    return (std::size_t{p} * geometry_.height + y) * geometry_.width + x;
  }

  SensorGeometry geometry_;
  std::vector<Timestamp> stamps_;
};

struct TimeSurfaceConfig {
  std::uint32_t radius = 2;
  double tau_us = 10'000.0;
  std::uint32_t channels = 1;

  std::uint32_t side() const { return 2 * radius + 1; }
  std::size_t size() const { return std::size_t{side()} * side() * channels; }

  void validate() const {
    if (radius < 1) throw ContractError("time-surface radius must be >= 1");
    if (!(tau_us > 0.0) || !std::isfinite(tau_us)) throw ContractError("time-surface tau must be positive");
    if (channels < 1) throw ContractError("time-surface channels must be >= 1");
  }
};

struct TimeSurface {
  std::vector<double> values;
  Event center;
  std::uint32_t radius = 0;
  std::uint32_t channels = 0;

  std::uint32_t side() const { return 2 * radius + 1; }

  double at(int dx, int dy, std::uint32_t p) const {
    const int r = static_cast<int>(radius);
    return values[(std::size_t{p} * side() + static_cast<std::size_t>(dy + r)) * side() + static_cast<std::size_t>(dx + r)];
  }

  double sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }
};

// Fills `out` (size config.size()) with the surface around `e`. The memory
// must already contain `e` for the centre to read 1.
inline void extract_into(const TimestampMemory& memory, const Event& e, const TimeSurfaceConfig& config,
                         std::span<double> out) {
  const auto& g = memory.geometry();
  if (g.channels != config.channels) {
    throw ContractError("time-surface expects " + std::to_string(config.channels) + " channels, memory has " +
                        std::to_string(g.channels));
  }
  const int r = static_cast<int>(config.radius);
  const std::size_t side = config.side();
  for (std::uint32_t p = 0; p < config.channels; ++p) {
    for (int dy = -r; dy <= r; ++dy) {
      const long long y = static_cast<long long>(e.y) + dy;
      double* row = out.data() + (std::size_t{p} * side + static_cast<std::size_t>(dy + r)) * side;
      for (int dx = -r; dx <= r; ++dx) {
        const long long x = static_cast<long long>(e.x) + dx;
        double v = 0.0;
        if (x >= 0 && y >= 0 && x < g.width && y < g.height) {
          const Timestamp last = memory.raw(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), p);
          if (last != TimestampMemory::kNever && last <= e.t) {
            const double dt = static_cast<double>(e.t - last);
            if (dt < config.tau_us) v = 1.0 - dt / config.tau_us;
          }
        }
        row[dx + r] = v;
      }
    }
  }
}

inline TimeSurface extract(const TimestampMemory& memory, const Event& e, const TimeSurfaceConfig& config) {
  config.validate();
  TimeSurface s;
  s.values.resize(config.size());
  s.center = e;
  s.radius = config.radius;
  s.channels = config.channels;
  extract_into(memory, e, config, s.values);
  return s;
}

inline bool is_valid_sum(double sum, std::uint32_t radius) { return sum >= 2.0 * radius; }

inline bool is_valid(const TimeSurface& surface, std::uint32_t radius) { return is_valid_sum(surface.sum(), radius); }

// Text grid dump, one block per channel, rows top to bottom.
inline std::string format_surface(const TimeSurface& s) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  const int r = static_cast<int>(s.radius);
  os << "# surface t=" << s.center.t << " x=" << s.center.x << " y=" << s.center.y << " p=" << s.center.p
     << " R=" << s.radius << " sum=" << s.sum() << "\n";
  for (std::uint32_t p = 0; p < s.channels; ++p) {
    os << "channel " << p << "\n";
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) os << (dx == -r ? "" : " ") << s.at(dx, dy, p);
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace evgest
