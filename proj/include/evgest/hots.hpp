#pragma once

// Hierarchical time-surface network.
//
// Each layer owns a bank of N prototypes living in time-surface space. While
// learning, the first N valid surfaces seed the bank; afterwards every valid
// surface pulls its nearest prototype towards itself with step
//   alpha_i * cos(S, C_i),   alpha_i = 1 / (1 + A_i)
// where A_i counts the surfaces already assigned to C_i. A prototype that has
// gone more than `reinit_window` valid surfaces without a match is replaced by
// the incoming surface. Every valid surface seen with a full bank produces an
// output event whose channel is the nearest prototype's index; invalid
// surfaces produce nothing.
//
// Network file ("HOTS", little-endian):
//   magic "HOTS", u32 version (=1), u8 merge_polarity, u32 layer_count
//   per layer:  u32 n, u32 radius, f64 tau_us, u32 in_channels
//   per layer, per prototype (index order): (2R+1)^2 * in_channels f64 values
//   in the channel-major surface layout of time_surface.hpp.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evgest/detail/byte_io.hpp"
#include "evgest/error.hpp"
#include "evgest/event.hpp"
#include "evgest/time_surface.hpp"

namespace evgest {

struct Prototype {
  std::vector<double> values;
  std::uint64_t match_count = 1;      // the seeding surface counts as the first match
  std::uint64_t last_match_tick = 0;  // tick of the latest assigned surface

  friend bool operator==(const Prototype&, const Prototype&) = default;
};

struct LayerConfig {
  std::uint32_t n = 8;
  std::uint32_t radius = 2;
  double tau_us = 10'000.0;
  std::uint32_t in_channels = 1;
  std::uint64_t reinit_window = 10'000;

  TimeSurfaceConfig surface_config() const { return {radius, tau_us, in_channels}; }
  std::size_t surface_size() const { return surface_config().size(); }

  void validate() const {
    if (n < 1) throw ContractError("layer needs at least one prototype");
    surface_config().validate();
    if (reinit_window < 1) throw ContractError("layer reinit_window must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Prototype arithmetic

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ContractError("cosine similarity of a zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double learning_rate(std::uint64_t match_count) { return 1.0 / (1.0 + static_cast<double>(match_count)); }

struct Match {
  std::size_t index = 0;
  double distance = 0.0;
};

// Lowest index wins ties.
inline Match nearest_prototype(std::span<const Prototype> bank, std::span<const double> surface) {
  if (bank.empty()) throw ContractError("nearest_prototype: empty prototype bank");
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const double d2 = squared_distance(bank[i].values, surface);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return {best, std::sqrt(best_d2)};
}

inline void learn_update(Prototype& proto, std::span<const double> surface, std::uint64_t tick) {
  if (proto.values.size() != surface.size()) throw ContractError("learn_update: shape mismatch");
  const double alpha = learning_rate(proto.match_count);
  const double beta = cosine_similarity(surface, proto.values);
  // Surfaces and prototypes are non-negative so beta >= 0; clamp keeps the
  // update a convex combination regardless.
  const double step = std::clamp(alpha * beta, 0.0, 1.0);
  for (std::size_t i = 0; i < surface.size(); ++i) proto.values[i] += step * (surface[i] - proto.values[i]);
  ++proto.match_count;
  proto.last_match_tick = tick;
}

// ---------------------------------------------------------------------------
// Layer

class Layer {
 public:
  explicit Layer(const LayerConfig& config) : config_(config), scratch_(config.surface_size()) {
    config_.validate();
    prototypes_.reserve(config_.n);
  }

  Layer(const LayerConfig& config, std::vector<Prototype> prototypes) : Layer(config) {
    for (const auto& p : prototypes) {
      if (p.values.size() != config_.surface_size()) throw ContractError("prototype shape does not match layer");
    }
    if (prototypes.size() > config_.n) throw ContractError("more prototypes than the layer's N");
    prototypes_ = std::move(prototypes);
  }

  const LayerConfig& config() const { return config_; }
  const std::vector<Prototype>& prototypes() const { return prototypes_; }
  bool learning() const { return learning_; }
  void set_learning(bool on) { learning_ = on; }
  std::uint64_t tick() const { return tick_; }
  bool full() const { return prototypes_.size() == config_.n; }

  TimestampMemory make_memory(std::uint32_t width, std::uint32_t height) const {
    return TimestampMemory({width, height, config_.in_channels});
  }

  // Replaces the stalest prototype whose last match lies more than
  // reinit_window ticks behind. Returns its index, or nothing.
  std::optional<std::size_t> reinit_stale(std::span<const double> surface) {
    std::optional<std::size_t> stalest;
    for (std::size_t i = 0; i < prototypes_.size(); ++i) {
      const auto& p = prototypes_[i];
      if (tick_ - p.last_match_tick > config_.reinit_window &&
          (!stalest || p.last_match_tick < prototypes_[*stalest].last_match_tick)) {
        stalest = i;
      }
    }
    if (stalest) {
      auto& p = prototypes_[*stalest];
      p.values.assign(surface.begin(), surface.end());
      p.match_count = 1;
      p.last_match_tick = tick_;
    }
    return stalest;
  }

  // Handles one valid surface. Returns the emitted channel, or nothing while
  // the bank is still being seeded.
  std::optional<std::uint32_t> process_surface(std::span<const double> surface) {
    if (surface.size() != config_.surface_size()) throw ContractError("surface shape does not match layer");
    ++tick_;
    if (!learning_) {
      if (!full()) throw ContractError("frozen layer has an incomplete prototype bank");
      return static_cast<std::uint32_t>(nearest_prototype(prototypes_, surface).index);
    }
    if (!full()) {
      prototypes_.push_back({std::vector<double>(surface.begin(), surface.end()), 1, tick_});
      return std::nullopt;
    }
    if (reinit_stale(surface)) {
      return static_cast<std::uint32_t>(nearest_prototype(prototypes_, surface).index);
    }
    const Match m = nearest_prototype(prototypes_, surface);
    learn_update(prototypes_[m.index], surface, tick_);
    return static_cast<std::uint32_t>(m.index);
  }

  std::optional<Event> forward_event(TimestampMemory& memory, const Event& e) {
    if (e.p >= config_.in_channels) {
      throw ContractError("layer input channel " + std::to_string(e.p) + " >= " + std::to_string(config_.in_channels));
    }
    memory.record(e);
    extract_into(memory, e, config_.surface_config(), scratch_);
    double sum = 0.0;
    for (double v : scratch_) sum += v;
    if (!is_valid_sum(sum, config_.radius)) return std::nullopt;
    auto id = process_surface(scratch_);
    if (!id) return std::nullopt;
    return Event{e.t, e.x, e.y, static_cast<std::uint16_t>(*id)};
  }

 private:
  LayerConfig config_;
  std::vector<Prototype> prototypes_;
  bool learning_ = false;
  std::uint64_t tick_ = 0;
  std::vector<double> scratch_;
};

// ---------------------------------------------------------------------------
// Network

struct NetworkConfig {
  std::vector<LayerConfig> layers;
  bool merge_polarity = true;

  void validate() const {
    if (layers.empty()) throw ContractError("network needs at least one layer");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].validate();
      if (i > 0 && layers[i].in_channels != layers[i - 1].n) {
        throw ContractError("layer " + std::to_string(i + 1) + " in_channels (" +
                            std::to_string(layers[i].in_channels) + ") must equal layer " + std::to_string(i) +
                            " N (" + std::to_string(layers[i - 1].n) + ")");
      }
    }
    if (merge_polarity && layers.front().in_channels != 1) {
      throw ContractError("merged polarity input requires layer 1 in_channels = 1");
    }
  }
};

// Collapses every channel onto channel 0.
inline EventStream merge_polarity(const EventStream& stream) {
  EventStream out{{stream.geometry.width, stream.geometry.height, 1}, stream.events};
  for (auto& e : out.events) e.p = 0;
  return out;
}

enum class TrainingMode { kJoint, kSequential };

struct TrainOptions {
  std::uint32_t epochs = 1;
  TrainingMode mode = TrainingMode::kJoint;
};

class Network {
 public:
  explicit Network(const NetworkConfig& config) : config_(config) {
    config_.validate();
    for (const auto& lc : config_.layers) layers_.emplace_back(lc);
  }

  Network(const NetworkConfig& config, std::vector<Layer> layers) : config_(config), layers_(std::move(layers)) {
    config_.validate();
    if (layers_.size() != config_.layers.size()) throw ContractError("layer count mismatch");
  }

  const NetworkConfig& config() const { return config_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::uint32_t output_channels() const { return config_.layers.back().n; }

  void set_learning(bool on) {
    for (auto& l : layers_) l.set_learning(on);
  }

  // Applies the input polarity merge and checks channel compatibility.
  EventStream prepare_input(const EventStream& stream) const {
    EventStream in = config_.merge_polarity ? merge_polarity(stream) : stream;
    if (in.geometry.channels != config_.layers.front().in_channels) {
      throw DataError("stream has " + std::to_string(in.geometry.channels) + " channels, layer 1 expects " +
                      std::to_string(config_.layers.front().in_channels));
    }
    return in;
  }

  // Each event traverses the cascade before the next one enters. Only the
  // first `depth` layers run (all when depth is 0).
  EventStream forward_stream(const EventStream& stream, std::size_t depth = 0) {
    if (depth == 0 || depth > layers_.size()) depth = layers_.size();
    const EventStream in = prepare_input(stream);
    std::vector<TimestampMemory> memories;
    memories.reserve(depth);
    for (std::size_t i = 0; i < depth; ++i) {
      memories.push_back(layers_[i].make_memory(in.geometry.width, in.geometry.height));
    }
    EventStream out{{in.geometry.width, in.geometry.height, config_.layers[depth - 1].n}, {}};
    for (const Event& e : in.events) {
      std::optional<Event> cur = e;
      for (std::size_t i = 0; i < depth && cur; ++i) cur = layers_[i].forward_event(memories[i], *cur);
      if (cur) out.events.push_back(*cur);
    }
    return out;
  }

  void train(std::span<const EventStream> clips, const TrainOptions& options = {}) {
    if (options.mode == TrainingMode::kJoint) {
      set_learning(true);
      for (std::uint32_t epoch = 0; epoch < options.epochs; ++epoch) {
        for (const auto& clip : clips) forward_stream(clip);
      }
      for (std::size_t i = 0; i < layers_.size(); ++i) require_full(i);
    } else {
      set_learning(false);
      for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].set_learning(true);
        for (std::uint32_t epoch = 0; epoch < options.epochs; ++epoch) {
          for (const auto& clip : clips) forward_stream(clip, i + 1);
        }
        require_full(i);
        layers_[i].set_learning(false);
      }
    }
    set_learning(false);
  }

 private:
  void require_full(std::size_t i) const {
    const auto& l = layers_[i];
    if (!l.full()) {
      throw DataError("layer " + std::to_string(i + 1) + " saw only " + std::to_string(l.prototypes().size()) +
                      " valid surfaces during training, needs N = " + std::to_string(l.config().n));
    }
  }

  NetworkConfig config_;
  std::vector<Layer> layers_;
};

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::string_view kNetworkMagic = "HOTS";
inline constexpr std::uint32_t kNetworkVersion = 1;

inline void write_network(detail::ByteWriter& out, const Network& net) {
  out.raw(kNetworkMagic);
  out.u32(kNetworkVersion);
  out.u8(net.config().merge_polarity ? 1 : 0);
  out.u32(static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    out.u32(l.config().n);
    out.u32(l.config().radius);
    out.f64(l.config().tau_us);
    out.u32(l.config().in_channels);
  }
  for (const auto& l : net.layers()) {
    if (!l.full()) throw ContractError("cannot serialize an untrained layer");
    for (const auto& p : l.prototypes()) {
      for (double v : p.values) out.f64(v);
    }
  }
}

// Loaded networks are frozen.
inline Network read_network(detail::ByteReader& in) {
  if (in.raw(kNetworkMagic.size(), "network magic") != kNetworkMagic) throw DataError("bad network magic");
  if (const auto v = in.u32("network version"); v != kNetworkVersion) {
    throw DataError("unsupported network version " + std::to_string(v));
  }
  NetworkConfig cfg;
  cfg.merge_polarity = in.u8("merge flag") != 0;
  const std::uint32_t count = in.u32("layer count");
  if (count == 0 || count > 64) throw DataError("implausible layer count " + std::to_string(count));
  for (std::uint32_t i = 0; i < count; ++i) {
    LayerConfig lc;
    lc.n = in.u32("layer n");
    lc.radius = in.u32("layer radius");
    lc.tau_us = in.f64("layer tau");
    lc.in_channels = in.u32("layer in_channels");
    cfg.layers.push_back(lc);
  }
  try {
    cfg.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("network header: ") + e.what());
  }
  std::vector<Layer> layers;
  for (const auto& lc : cfg.layers) {
    std::vector<Prototype> bank(lc.n);
    for (auto& p : bank) {
      p.values.resize(lc.surface_size());
      for (auto& v : p.values) v = in.f64("prototype value");
    }
    layers.emplace_back(lc, std::move(bank));
  }
  return Network(cfg, std::move(layers));
}

inline std::vector<std::byte> serialize_network(const Network& net) {
  detail::ByteWriter out;
  write_network(out, net);
  return std::move(out).take();
}

inline Network deserialize_network(std::span<const std::byte> data) {
  detail::ByteReader in(data);
  Network net = read_network(in);
  if (!in.at_end()) throw DataError("trailing bytes after network");
  return net;
}

}  // namespace evgest
