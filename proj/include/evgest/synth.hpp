#pragma once

// Synthetic labelled event streams.
//
// Edge stimuli (bars, blobs) emit events only where a pixel crosses a
// contour: ON (channel 1) when the leading edge arrives, OFF (channel 0) when
// the trailing edge leaves. Crossing times are analytic; each crossing emits
// one event at the crossing time plus further events every 1e6/rate us while
// the edge dwells on the pixel (1e6/speed us), each jittered by a uniform
// integer in [0, jitter_us]. Noise is a homogeneous Poisson process sampled by
// inversion. All randomness comes from evgest::Rng.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "evgest/error.hpp"
#include "evgest/event.hpp"
#include "evgest/manifest.hpp"
#include "evgest/random.hpp"

namespace evgest {

enum class Provenance : std::uint8_t { kForeground, kBackground, kNoise };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kForeground: return "foreground";
    case Provenance::kBackground: return "background";
    case Provenance::kNoise: return "noise";
  }
  return "unknown";
}

// Infinite bar translating along `direction_deg` (0 = +x, 90 = +y). At t = 0
// its leading edge sits at `start_px` along the motion axis.
struct MovingBar {
  double direction_deg = 0.0;
  double speed_px_s = 1000.0;
  double width_px = 4.0;
  double start_px = 0.0;
  double rate = 1000.0;  // events/s per active pixel
  Provenance tag = Provenance::kForeground;
};

struct TranslatingBlob {
  double start_x = 0.0;
  double start_y = 0.0;
  double velocity_x = 1000.0;  // px/s
  double velocity_y = 0.0;
  double radius_px = 6.0;
  double rate = 1000.0;  // events/s per active pixel
  Provenance tag = Provenance::kForeground;
};

// Uniform Poisson events in [x0, x1) x [y0, y1) during [t_begin, t_end).
// Zero-valued upper bounds mean "whole array" / "whole clip".
struct PoissonNoise {
  double rate = 1000.0;  // events/s over the whole region
  std::uint32_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  Timestamp t_begin = 0, t_end = 0;
  Provenance tag = Provenance::kNoise;
};

using SceneComponent = std::variant<MovingBar, TranslatingBlob, PoissonNoise>;

struct SceneSpec {
  SensorGeometry geometry{64, 64, 2};
  Timestamp duration_us = 100'000;
  Timestamp jitter_us = 100;
  std::vector<SceneComponent> components;
  std::string label;
};

struct LabeledStream {
  EventStream stream;
  std::vector<Provenance> tags;  // aligned with stream.events
  std::string label;
};

namespace detail {

struct TaggedEvent {
  Event event;
  Provenance tag;
};

inline std::uint16_t edge_channel(const SensorGeometry& g, bool on) {
  return static_cast<std::uint16_t>(on && g.channels > 1 ? 1 : 0);
}

// Emits the burst for one contour crossing at (fractional) time t_cross.
inline void emit_crossing(std::vector<TaggedEvent>& out, const SceneSpec& spec, Rng& rng, std::uint32_t x,
                          std::uint32_t y, bool on, double t_cross_us, double dwell_us, double rate,
                          Provenance tag) {
  if (rate <= 0.0 || t_cross_us < 0.0 || t_cross_us >= static_cast<double>(spec.duration_us)) return;
  const double period_us = 1e6 / rate;
  for (double offset = 0.0; offset < dwell_us || offset == 0.0; offset += period_us) {
    const double t = t_cross_us + offset;
    if (t >= static_cast<double>(spec.duration_us)) break;
    const auto base = static_cast<Timestamp>(std::llround(t));
    const Timestamp jitter = spec.jitter_us == 0 ? 0 : rng.below(spec.jitter_us + 1);
    out.push_back({{base + jitter, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                    edge_channel(spec.geometry, on)},
                   tag});
  }
}

inline void generate(const MovingBar& bar, const SceneSpec& spec, Rng& rng, std::vector<TaggedEvent>& out) {
  if (!(bar.speed_px_s > 0.0)) throw ContractError("moving bar: zero-length trajectory (speed must be > 0)");
  const double rad = bar.direction_deg * std::numbers::pi / 180.0;
  const double cx = std::cos(rad), cy = std::sin(rad);
  const double us_per_px = 1e6 / bar.speed_px_s;
  for (std::uint32_t y = 0; y < spec.geometry.height; ++y) {
    for (std::uint32_t x = 0; x < spec.geometry.width; ++x) {
      const double s = x * cx + y * cy;
      const double t_on = (s - bar.start_px) * us_per_px;
      const double t_off = (s - bar.start_px + bar.width_px) * us_per_px;
      emit_crossing(out, spec, rng, x, y, true, t_on, us_per_px, bar.rate, bar.tag);
      emit_crossing(out, spec, rng, x, y, false, t_off, us_per_px, bar.rate, bar.tag);
    }
  }
}

inline void generate(const TranslatingBlob& blob, const SceneSpec& spec, Rng& rng, std::vector<TaggedEvent>& out) {
  const double v2 = blob.velocity_x * blob.velocity_x + blob.velocity_y * blob.velocity_y;
  if (!(v2 > 0.0)) throw ContractError("translating blob: zero-length trajectory (velocity must be non-zero)");
  const double dwell_us = 1e6 / std::sqrt(v2);
  const double r2 = blob.radius_px * blob.radius_px;
  for (std::uint32_t y = 0; y < spec.geometry.height; ++y) {
    for (std::uint32_t x = 0; x < spec.geometry.width; ++x) {
      // |d - v t|^2 = r^2 with d = pixel - start, t in seconds.
      const double dx = x - blob.start_x, dy = y - blob.start_y;
      const double dv = dx * blob.velocity_x + dy * blob.velocity_y;
      const double disc = dv * dv - v2 * (dx * dx + dy * dy - r2);
      if (disc <= 0.0) continue;
      const double root = std::sqrt(disc);
      emit_crossing(out, spec, rng, x, y, true, (dv - root) / v2 * 1e6, dwell_us, blob.rate, blob.tag);
      emit_crossing(out, spec, rng, x, y, false, (dv + root) / v2 * 1e6, dwell_us, blob.rate, blob.tag);
    }
  }
}

inline void generate(const PoissonNoise& noise, const SceneSpec& spec, Rng& rng, std::vector<TaggedEvent>& out) {
  if (noise.rate <= 0.0) return;
  const std::uint32_t x1 = noise.x1 == 0 ? spec.geometry.width : std::min(noise.x1, spec.geometry.width);
  const std::uint32_t y1 = noise.y1 == 0 ? spec.geometry.height : std::min(noise.y1, spec.geometry.height);
  const Timestamp t_end = noise.t_end == 0 ? spec.duration_us : std::min(noise.t_end, spec.duration_us);
  if (noise.x0 >= x1 || noise.y0 >= y1 || noise.t_begin >= t_end) return;
  double t = static_cast<double>(noise.t_begin);
  while (true) {
    t += rng.exponential(noise.rate) * 1e6;
    if (t >= static_cast<double>(t_end)) break;
    Event e;
    e.t = static_cast<Timestamp>(t);
    e.x = static_cast<std::uint16_t>(noise.x0 + rng.below(x1 - noise.x0));
    e.y = static_cast<std::uint16_t>(noise.y0 + rng.below(y1 - noise.y0));
    e.p = static_cast<std::uint16_t>(rng.below(spec.geometry.channels));
    out.push_back({e, noise.tag});
  }
}

inline LabeledStream assemble(std::vector<TaggedEvent> events, const SceneSpec& spec) {
  std::stable_sort(events.begin(), events.end(),
                   [](const TaggedEvent& a, const TaggedEvent& b) { return a.event.t < b.event.t; });
  LabeledStream out{{spec.geometry, {}}, {}, spec.label};
  out.stream.events.reserve(events.size());
  out.tags.reserve(events.size());
  for (const auto& te : events) {
    out.stream.events.push_back(te.event);
    out.tags.push_back(te.tag);
  }
  return out;
}

}  // namespace detail

inline LabeledStream generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  check_geometry(spec.geometry);
  if (spec.duration_us == 0) throw ContractError("scene duration must be > 0");
  Rng rng(seed);
  std::vector<detail::TaggedEvent> events;
  for (const auto& c : spec.components) {
    std::visit([&](const auto& comp) { detail::generate(comp, spec, rng, events); }, c);
  }
  return detail::assemble(std::move(events), spec);
}

inline LabeledStream gen_moving_bar(const SensorGeometry& geometry, Timestamp duration_us, const MovingBar& bar,
                                    std::uint64_t seed, Timestamp jitter_us = 100) {
  return generate_scene({geometry, duration_us, jitter_us, {bar}, "bar"}, seed);
}

// Dense localized foreground merged with spatially uniform background.
inline LabeledStream gen_composite(const SceneSpec& foreground, double background_rate, std::uint64_t seed) {
  SceneSpec spec = foreground;
  PoissonNoise bg;
  bg.rate = background_rate;
  bg.tag = Provenance::kBackground;
  spec.components.push_back(bg);
  return generate_scene(spec, seed);
}

// Background-suppression test scene: uniform background at `cell_rate`
// events/s per cell of a 3x3 tiling, plus a Poisson foreground
// `density_ratio` times denser confined to the centre cell and active over
// the middle half of the clip.
inline LabeledStream gen_composite_scene(const SensorGeometry& geometry, Timestamp duration_us, double cell_rate,
                                         double density_ratio, std::uint64_t seed) {
  SceneSpec spec;
  spec.geometry = geometry;
  spec.duration_us = duration_us;
  spec.label = "composite";
  PoissonNoise fg;
  fg.rate = density_ratio * cell_rate;
  fg.x0 = (geometry.width + 2) / 3;
  fg.x1 = (2 * geometry.width + 2) / 3;
  fg.y0 = (geometry.height + 2) / 3;
  fg.y1 = (2 * geometry.height + 2) / 3;
  fg.t_begin = duration_us / 4;
  fg.t_end = 3 * duration_us / 4;
  fg.tag = Provenance::kForeground;
  spec.components.push_back(fg);
  return gen_composite(spec, 9.0 * cell_rate, seed);
}

// ---------------------------------------------------------------------------
// Directional gesture set

struct GestureSetOptions {
  SensorGeometry geometry{64, 64, 2};
  double speed_px_s = 1500.0;
  double radius_px = 8.0;
  double rate = 3000.0;          // events/s per active pixel on the blob contour
  double noise_rate = 20'000.0;  // uniform background events/s over the array
  double variation = 0.3;        // relative spread of speed and radius
  Timestamp jitter_us = 100;
};

inline const std::vector<std::string>& default_gesture_classes() {
  static const std::vector<std::string> classes{"up", "down", "left", "right"};
  return classes;
}

namespace detail {

// Maps an event of the canonical rightward clip (generated on the swapped
// geometry for vertical classes) into the class frame.
inline Event orient(const Event& e, std::string_view cls, const SensorGeometry& g) {
  Event o = e;
  if (cls == "right") return o;
  if (cls == "left") {
    o.x = static_cast<std::uint16_t>(g.width - 1 - e.x);
  } else if (cls == "down") {
    o.x = e.y;
    o.y = e.x;
  } else if (cls == "up") {
    o.x = e.y;
    o.y = static_cast<std::uint16_t>(g.height - 1 - e.x);
  } else {
    throw ContractError("unknown gesture class '" + std::string(cls) + "' (expected up, down, left or right)");
  }
  return o;
}

}  // namespace detail

// One translating blob per clip, moving in the class direction. Clip j of
// every class shares its random parameters, so e.g. left_j is the
// x-reflection of right_j.
inline LabeledStream gen_gesture(std::string_view cls, std::uint64_t clip_index, const GestureSetOptions& opt,
                                 std::uint64_t seed) {
  const bool vertical = cls == "up" || cls == "down";
  SceneSpec spec;
  spec.geometry = vertical ? SensorGeometry{opt.geometry.height, opt.geometry.width, opt.geometry.channels}
                           : opt.geometry;
  spec.jitter_us = opt.jitter_us;
  spec.label = std::string(cls);

  Rng params(mix_seed(seed, clip_index));
  const double speed = opt.speed_px_s * params.uniform(1.0 - opt.variation, 1.0 + opt.variation);
  const double radius = opt.radius_px * params.uniform(1.0 - opt.variation, 1.0 + opt.variation);
  const double lateral = params.uniform(-0.2, 0.2) * spec.geometry.height;
  const double lead_in = params.uniform(0.0, radius);

  TranslatingBlob blob;
  blob.start_x = -radius - lead_in;
  blob.start_y = 0.5 * (spec.geometry.height - 1) + lateral;
  blob.velocity_x = speed;
  blob.velocity_y = 0.0;
  blob.radius_px = radius;
  blob.rate = opt.rate;
  const double travel_px = spec.geometry.width + 2.0 * radius + lead_in;
  spec.duration_us = static_cast<Timestamp>(std::ceil(travel_px / speed * 1e6));
  spec.components.push_back(blob);
  if (opt.noise_rate > 0.0) {
    PoissonNoise noise;
    noise.rate = opt.noise_rate;
    noise.tag = Provenance::kBackground;
    spec.components.push_back(noise);
  }

  LabeledStream canonical = generate_scene(spec, mix_seed(seed ^ 0x5EEDull, clip_index));
  LabeledStream out{{opt.geometry, {}}, std::move(canonical.tags), std::string(cls)};
  out.stream.events.reserve(canonical.stream.events.size());
  for (const Event& e : canonical.stream.events) out.stream.events.push_back(detail::orient(e, cls, opt.geometry));
  return out;
}

struct GeneratedClip {
  LabeledStream data;
  std::string subject;
};

// Clips ordered class by class; subjects cycle through s01..s10.
inline std::vector<GeneratedClip> gen_gesture_set(const std::vector<std::string>& classes,
                                                  std::uint32_t clips_per_class, std::uint64_t seed,
                                                  const GestureSetOptions& opt = {}) {
  if (clips_per_class < 1) throw ContractError("clips_per_class must be >= 1");
  std::vector<GeneratedClip> out;
  out.reserve(classes.size() * clips_per_class);
  for (const auto& cls : classes) {
    for (std::uint32_t j = 0; j < clips_per_class; ++j) {
      char subject[8];
      std::snprintf(subject, sizeof(subject), "s%02u", j % 10 + 1);
      out.push_back({gen_gesture(cls, j, opt, seed), subject});
    }
  }
  return out;
}

inline std::string format_tags(const std::vector<Provenance>& tags) {
  std::string out;
  for (auto t : tags) {
    out += to_string(t);
    out += '\n';
  }
  return out;
}

}  // namespace evgest
