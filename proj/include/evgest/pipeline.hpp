#pragma once

// End-to-end pipeline: optional background suppression, polarity merge,
// time-surface network, pooled signature, k-NN.
//
// Model file ("EVGM", little-endian):
//   magic "EVGM", u32 version (=1),
//   u32 length + canonical config text (see config.hpp),
//   network block (hots.hpp), k-NN block (classifier.hpp).

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evgest/background_suppression.hpp"
#include "evgest/classifier.hpp"
#include "evgest/config.hpp"
#include "evgest/detail/byte_io.hpp"
#include "evgest/error.hpp"
#include "evgest/event.hpp"
#include "evgest/hots.hpp"

namespace evgest {

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config) : config_(std::move(config)), network_(init_network(config_)) {}

  Pipeline(PipelineConfig config, Network network, KnnModel knn)
      : config_(std::move(config)), network_(std::move(network)), knn_(std::move(knn)), trained_(true) {}

  const PipelineConfig& config() const { return config_; }
  const Network& network() const { return network_; }
  const KnnModel& knn() const { return knn_; }
  bool trained() const { return trained_; }

  // Background suppression stage; passes the stream through when disabled.
  EventStream suppress(const EventStream& raw, RetentionStats* stats = nullptr) const {
    if (!config_.dbs) {
      if (stats) *stats += RetentionStats{raw.size(), raw.size()};
      return raw;
    }
    DbsFilter filter(*config_.dbs, raw.geometry);
    FilterResult r = filter_stream(filter, raw);
    if (stats) *stats += r.stats;
    return std::move(r.kept);
  }

  void train(std::span<const EventStream> raw_clips, const std::vector<std::string>& labels) {
    if (raw_clips.size() != labels.size()) throw ContractError("train: clip/label count mismatch");
    if (raw_clips.size() < config_.k) {
      throw DataError("train: k = " + std::to_string(config_.k) + " exceeds the " +
                      std::to_string(raw_clips.size()) + " training clips");
    }
    std::vector<EventStream> filtered;
    filtered.reserve(raw_clips.size());
    for (const auto& c : raw_clips) filtered.push_back(suppress(c));

    network_ = init_network(config_);
    network_.train(filtered, {config_.epochs, config_.mode});

    knn_ = KnnModel{};
    knn_.k = config_.k;
    knn_.pooling = config_.pooling;
    knn_.n_end = network_.output_channels();
    for (std::size_t i = 0; i < filtered.size(); ++i) {
      knn_.signatures.push_back(encode_filtered(filtered[i]));
      knn_.labels.push_back(labels[i]);
    }
    trained_ = true;
  }

  // Normalized signature of a raw clip with the frozen network.
  Signature signature(const EventStream& raw, RetentionStats* stats = nullptr) {
    return encode_filtered(suppress(raw, stats));
  }

  KnnResult classify(const EventStream& raw, RetentionStats* stats = nullptr) {
    require_trained();
    return knn_classify(knn_, signature(raw, stats));
  }

 private:
  static Network init_network(const PipelineConfig& cfg) {
    cfg.validate();
    return Network(cfg.network_config());
  }

  Signature encode_filtered(const EventStream& filtered) {
    const EventStream end = network_.forward_stream(filtered);
    return normalize(accumulate(end, config_.pooling, network_.output_channels()));
  }

  void require_trained() const {
    if (!trained_) throw ContractError("pipeline has not been trained");
  }

  PipelineConfig config_;
  Network network_;
  KnnModel knn_;
  bool trained_ = false;
};

// ---------------------------------------------------------------------------
// Model file

inline constexpr std::string_view kModelMagic = "EVGM";
inline constexpr std::uint32_t kModelVersion = 1;

inline std::vector<std::byte> serialize_model(const Pipeline& p) {
  if (!p.trained()) throw ContractError("cannot serialize an untrained pipeline");
  detail::ByteWriter out;
  out.raw(kModelMagic);
  out.u32(kModelVersion);
  out.str(format_config(p.config()));
  write_network(out, p.network());
  write_knn(out, p.knn());
  return std::move(out).take();
}

inline Pipeline deserialize_model(std::span<const std::byte> data) {
  detail::ByteReader in(data);
  if (data.size() < kModelMagic.size() || in.raw(kModelMagic.size(), "model magic") != kModelMagic) {
    throw DataError("bad magic: not an EVGM model file");
  }
  if (const auto v = in.u32("model version"); v != kModelVersion) {
    throw DataError("unsupported model version " + std::to_string(v));
  }
  PipelineConfig cfg = parse_config(in.str("model config"));
  Network net = read_network(in);
  KnnModel knn = read_knn(in);
  if (!in.at_end()) throw DataError("trailing bytes after model");
  if (knn.n_end != net.output_channels()) throw DataError("model: k-NN signature width does not match network");
  return Pipeline(std::move(cfg), std::move(net), std::move(knn));
}

inline void save_model(const std::filesystem::path& path, const Pipeline& p) { write_file(path, serialize_model(p)); }

inline Pipeline load_model(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  try {
    return deserialize_model(detail::as_bytes(data));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Evaluation runs

struct RunReport {
  Evaluation evaluation;
  std::map<std::string, RetentionStats> retention;  // per true label
  std::vector<std::pair<std::string, std::string>> config;
  std::size_t events = 0;
  double wall_clock_s = 0.0;

  double events_per_second() const { return wall_clock_s > 0.0 ? static_cast<double>(events) / wall_clock_s : 0.0; }
};

inline RunReport evaluate_clips(Pipeline& pipeline, std::span<const EventStream> clips,
                                const std::vector<std::string>& labels) {
  if (clips.size() != labels.size()) throw ContractError("evaluate: clip/label count mismatch");
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  std::vector<std::string> predicted;
  predicted.reserve(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    report.events += clips[i].size();
    predicted.push_back(pipeline.classify(clips[i], &report.retention[labels[i]]).label);
  }
  report.evaluation = score(labels, predicted, pipeline.knn().labels);
  report.config = config_entries(pipeline.config());
  report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace evgest
