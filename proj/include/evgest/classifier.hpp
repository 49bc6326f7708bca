#pragma once

// Histogram signatures of end-layer activity and k-nearest-neighbour
// classification.
//
// A signature has grid_rows * grid_cols * n_end bins; an event at pixel
// (x, y) with channel p lands in bin (row * grid_cols + col) * n_end + p,
// using the same cell tiling as background suppression. Signatures are L1
// normalized over the whole vector before classification.
//
// Model block ("KNNM", little-endian):
//   magic "KNNM", u32 version (=1), u32 k, u32 grid_rows, u32 grid_cols,
//   u32 n_end, u32 count, then per entry: u32 label length, label bytes
//   (UTF-8), u8 normalized, grid_rows*grid_cols*n_end f64 values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "evgest/background_suppression.hpp"
#include "evgest/detail/byte_io.hpp"
#include "evgest/error.hpp"
#include "evgest/event.hpp"
#include "evgest/random.hpp"

namespace evgest {

struct PoolingConfig {
  std::uint32_t grid_rows = 1;
  std::uint32_t grid_cols = 1;

  void validate() const {
    if (grid_rows < 1 || grid_cols < 1) throw ContractError("pooling grid must be at least 1x1");
  }
};

struct Signature {
  std::vector<double> values;
  bool normalized = false;

  friend bool operator==(const Signature&, const Signature&) = default;
};

inline Signature accumulate(const EventStream& stream, const PoolingConfig& pooling, std::uint32_t n_end) {
  pooling.validate();
  if (n_end < 1) throw ContractError("accumulate: n_end must be >= 1");
  Signature sig;
  sig.values.assign(std::size_t{pooling.grid_rows} * pooling.grid_cols * n_end, 0.0);
  for (const Event& e : stream.events) {
    if (e.p >= n_end) {
      throw ContractError("accumulate: channel " + std::to_string(e.p) + " >= n_end " + std::to_string(n_end));
    }
    const GridCell c = cell_index(e.x, e.y, stream.geometry, pooling.grid_rows, pooling.grid_cols);
    sig.values[(std::size_t{c.row} * pooling.grid_cols + c.col) * n_end + e.p] += 1.0;
  }
  return sig;
}

inline Signature normalize(Signature sig) {
  const double total = std::accumulate(sig.values.begin(), sig.values.end(), 0.0);
  if (total > 0.0) {
    for (auto& v : sig.values) v /= total;
  }
  sig.normalized = true;
  return sig;
}

// ---------------------------------------------------------------------------
// k-NN

struct KnnModel {
  std::vector<Signature> signatures;
  std::vector<std::string> labels;
  std::uint32_t k = 1;
  PoolingConfig pooling;
  std::uint32_t n_end = 1;

  std::size_t size() const { return signatures.size(); }

  void validate() const {
    if (signatures.size() != labels.size()) throw ContractError("knn model: signature/label count mismatch");
    if (k < 1) throw ContractError("knn model: k must be >= 1");
    if (k > signatures.size()) {
      throw ContractError("knn model: k = " + std::to_string(k) + " exceeds training-set size " +
                          std::to_string(signatures.size()));
    }
  }

  friend bool operator==(const KnnModel& a, const KnnModel& b) {
    return a.signatures == b.signatures && a.labels == b.labels && a.k == b.k &&
           a.pooling.grid_rows == b.pooling.grid_rows && a.pooling.grid_cols == b.pooling.grid_cols &&
           a.n_end == b.n_end;
  }
};

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

struct KnnResult {
  std::string label;
  std::vector<Neighbor> neighbors;  // the k nearest, closest first
};

inline double euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("signature length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d);
}

// Majority vote among the k nearest (distance ties go to the earlier training
// entry). Vote ties go to the tied label whose best neighbour ranks first.
inline KnnResult knn_classify(const KnnModel& model, const Signature& query) {
  if (model.signatures.empty()) throw ContractError("knn_classify: empty model");
  model.validate();
  std::vector<Neighbor> all(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) all[i] = {i, euclidean(model.signatures[i].values, query.values)};
  auto closer = [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  };
  std::partial_sort(all.begin(), all.begin() + model.k, all.end(), closer);
  all.resize(model.k);

  std::map<std::string, std::size_t> votes;
  for (const auto& n : all) ++votes[model.labels[n.index]];
  std::size_t best_votes = 0;
  for (const auto& [label, v] : votes) best_votes = std::max(best_votes, v);
  KnnResult result;
  for (const auto& n : all) {
    if (votes[model.labels[n.index]] == best_votes) {
      result.label = model.labels[n.index];
      break;
    }
  }
  result.neighbors = std::move(all);
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation

struct ConfusionMatrix {
  std::vector<std::string> labels;             // sorted
  std::vector<std::vector<std::size_t>> cells;  // [true][predicted]

  std::size_t index_of(const std::string& label) const {
    auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it == labels.end() || *it != label) throw ContractError("unknown label '" + label + "'");
    return static_cast<std::size_t>(it - labels.begin());
  }

  std::size_t row_sum(std::size_t r) const { return std::accumulate(cells[r].begin(), cells[r].end(), std::size_t{0}); }
};

struct Evaluation {
  std::size_t correct = 0;
  std::size_t total = 0;
  ConfusionMatrix confusion;

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

inline Evaluation score(const std::vector<std::string>& truth, const std::vector<std::string>& predicted,
                        std::vector<std::string> label_set = {}) {
  if (truth.size() != predicted.size()) throw ContractError("score: truth/prediction count mismatch");
  label_set.insert(label_set.end(), truth.begin(), truth.end());
  label_set.insert(label_set.end(), predicted.begin(), predicted.end());
  std::sort(label_set.begin(), label_set.end());
  label_set.erase(std::unique(label_set.begin(), label_set.end()), label_set.end());

  Evaluation ev;
  ev.total = truth.size();
  ev.confusion.labels = std::move(label_set);
  const std::size_t n = ev.confusion.labels.size();
  ev.confusion.cells.assign(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++ev.confusion.cells[ev.confusion.index_of(truth[i])][ev.confusion.index_of(predicted[i])];
    if (truth[i] == predicted[i]) ++ev.correct;
  }
  return ev;
}

inline Evaluation evaluate(const KnnModel& model, const std::vector<Signature>& test,
                           const std::vector<std::string>& truth) {
  std::vector<std::string> predicted;
  predicted.reserve(test.size());
  for (const auto& s : test) predicted.push_back(knn_classify(model, s).label);
  return score(truth, predicted, model.labels);
}

// ---------------------------------------------------------------------------
// Splits

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Draws train_per_class clips of every class into train; the rest is test.
// Both lists are returned in ascending index order.
inline Split stratified_split(const std::vector<std::string>& labels, std::uint32_t train_per_class, Rng& rng) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Split split;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < train_per_class) {
      throw DataError("class '" + label + "' has " + std::to_string(idx.size()) + " clips, need " +
                      std::to_string(train_per_class) + " for training");
    }
    shuffle(idx.begin(), idx.end(), rng);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + train_per_class);
    split.test.insert(split.test.end(), idx.begin() + train_per_class, idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

inline std::vector<Split> shuffle_splits(const std::vector<std::string>& labels, std::uint32_t shuffles,
                                         std::uint32_t train_per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Split> out;
  for (std::uint32_t s = 0; s < shuffles; ++s) out.push_back(stratified_split(labels, train_per_class, rng));
  return out;
}

// Clips whose subject is listed go to test, all others to train.
inline Split subject_split(const std::vector<std::string>& subjects, const std::vector<std::string>& test_subjects) {
  Split split;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const bool is_test = std::find(test_subjects.begin(), test_subjects.end(), subjects[i]) != test_subjects.end();
    (is_test ? split.test : split.train).push_back(i);
  }
  return split;
}

struct CrossValidation {
  std::vector<double> accuracies;
  double mean = 0.0;
};

// `run` trains on split.train, evaluates on split.test and returns accuracy.
inline CrossValidation cross_validate(const std::vector<std::string>& labels, std::uint32_t shuffles,
                                      std::uint32_t train_per_class, std::uint64_t seed,
                                      const std::function<double(const Split&)>& run) {
  CrossValidation cv;
  for (const auto& split : shuffle_splits(labels, shuffles, train_per_class, seed)) cv.accuracies.push_back(run(split));
  if (!cv.accuracies.empty()) {
    cv.mean = std::accumulate(cv.accuracies.begin(), cv.accuracies.end(), 0.0) /
              static_cast<double>(cv.accuracies.size());
  }
  return cv;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::string_view kKnnMagic = "KNNM";
inline constexpr std::uint32_t kKnnVersion = 1;

inline void write_knn(detail::ByteWriter& out, const KnnModel& model) {
  model.validate();
  const std::size_t dim = std::size_t{model.pooling.grid_rows} * model.pooling.grid_cols * model.n_end;
  out.raw(kKnnMagic);
  out.u32(kKnnVersion);
  out.u32(model.k);
  out.u32(model.pooling.grid_rows);
  out.u32(model.pooling.grid_cols);
  out.u32(model.n_end);
  out.u32(static_cast<std::uint32_t>(model.size()));
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (model.signatures[i].values.size() != dim) throw ContractError("knn model: signature length mismatch");
    out.str(model.labels[i]);
    out.u8(model.signatures[i].normalized ? 1 : 0);
    for (double v : model.signatures[i].values) out.f64(v);
  }
}

inline KnnModel read_knn(detail::ByteReader& in) {
  if (in.raw(kKnnMagic.size(), "knn magic") != kKnnMagic) throw DataError("bad knn model magic");
  if (const auto v = in.u32("knn version"); v != kKnnVersion) {
    throw DataError("unsupported knn model version " + std::to_string(v));
  }
  KnnModel m;
  m.k = in.u32("knn k");
  m.pooling.grid_rows = in.u32("pooling rows");
  m.pooling.grid_cols = in.u32("pooling cols");
  m.n_end = in.u32("n_end");
  const std::uint32_t count = in.u32("knn count");
  const std::size_t dim = std::size_t{m.pooling.grid_rows} * m.pooling.grid_cols * m.n_end;
  if (dim == 0 || dim * count * 8 > in.remaining()) throw DataError("knn model header inconsistent with payload");
  for (std::uint32_t i = 0; i < count; ++i) {
    m.labels.push_back(in.str("label"));
    Signature s;
    s.normalized = in.u8("normalized flag") != 0;
    s.values.resize(dim);
    for (auto& v : s.values) v = in.f64("signature value");
    m.signatures.push_back(std::move(s));
  }
  try {
    m.validate();
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  return m;
}

}  // namespace evgest
