#pragma once

// Per-stage throughput measurement. Every stage is timed over the whole clip
// set and reported as raw input events per second, so stage numbers are
// directly comparable: the full pipeline does the work of all other stages
// and cannot be faster than the slowest of them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evgest/pipeline.hpp"
#include "evgest/report.hpp"

namespace evgest {

struct StageThroughput {
  std::string stage;
  std::vector<double> runs;  // events/s per repetition
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct BenchReport {
  std::size_t clips = 0;
  std::size_t events = 0;
  unsigned threads = 1;
  unsigned repeats = 0;
  std::vector<StageThroughput> stages;  // empty when there were no events

  const StageThroughput* find(std::string_view name) const {
    for (const auto& s : stages) {
      if (s.stage == name) return &s;
    }
    return nullptr;
  }
};

namespace detail {

inline StageThroughput summarize(std::string name, std::vector<double> runs) {
  StageThroughput s{std::move(name), std::move(runs)};
  std::vector<double> sorted = s.runs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : sorted) var += (v - s.mean) * (v - s.mean);
  s.stddev = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
  return s;
}

template <typename Fn>
StageThroughput time_stage(std::string name, unsigned repeats, std::size_t events, Fn&& body) {
  std::vector<double> runs;
  for (unsigned r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    body();
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    runs.push_back(s > 0.0 ? static_cast<double>(events) / s : 0.0);
  }
  return summarize(std::move(name), std::move(runs));
}

}  // namespace detail

// Trains `config` on the clips (untimed), then times "dbs", "layers" (on the
// suppressed streams) and "full" (raw clip to predicted label). Single
// threaded.
inline BenchReport run_bench(const PipelineConfig& config, std::span<const EventStream> clips,
                             const std::vector<std::string>& labels, unsigned repeats = 5) {
  BenchReport report;
  report.clips = clips.size();
  report.repeats = std::max(repeats, 1u);
  for (const auto& c : clips) report.events += c.size();
  if (report.events == 0) return report;

  Pipeline pipeline(config);
  pipeline.train(clips, labels);

  std::vector<EventStream> suppressed;
  for (const auto& c : clips) suppressed.push_back(pipeline.suppress(c));
  Network network = pipeline.network();

  volatile std::size_t sink = 0;
  if (config.dbs) {
    report.stages.push_back(detail::time_stage("dbs", report.repeats, report.events, [&] {
      for (const auto& c : clips) sink = sink + pipeline.suppress(c).size();
    }));
  }
  report.stages.push_back(detail::time_stage("layers", report.repeats, report.events, [&] {
    for (const auto& s : suppressed) sink = sink + network.forward_stream(s).size();
  }));
  report.stages.push_back(detail::time_stage("full", report.repeats, report.events, [&] {
    for (const auto& c : clips) sink = sink + pipeline.classify(c).label.size();
  }));
  return report;
}

inline std::string format_bench(const BenchReport& r) {
  std::string out = "# throughput benchmark (raw input events per second, median of " +
                    std::to_string(r.repeats) + " runs, " + std::to_string(r.threads) + " thread)\n";
  KeyValues kv;
  kv.emplace_back("clips", std::to_string(r.clips));
  kv.emplace_back("events", std::to_string(r.events));
  kv.emplace_back("threads", std::to_string(r.threads));
  kv.emplace_back("repeats", std::to_string(r.repeats));
  if (r.stages.empty()) {
    out += "# no events in input\n";
    kv.emplace_back("throughput", "n/a");
  }
  for (const auto& s : r.stages) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "# %-7s %14.0f ev/s  (mean %.0f, stddev %.0f)\n", s.stage.c_str(), s.median,
                  s.mean, s.stddev);
    out += buf;
    kv.emplace_back("throughput." + s.stage + ".median", detail::format_double(s.median));
    kv.emplace_back("throughput." + s.stage + ".mean", detail::format_double(s.mean));
    kv.emplace_back("throughput." + s.stage + ".stddev", detail::format_double(s.stddev));
  }
  return out + format_kv(kv);
}

}  // namespace evgest
