#pragma once

// Report text: '#'-prefixed human-readable lines followed by machine-readable
// "key = value" lines. Doubles use the shortest round-trip representation,
// so parse_kv(format_kv(x)) == x.

#include <cstdio>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evgest/config.hpp"
#include "evgest/error.hpp"
#include "evgest/pipeline.hpp"

namespace evgest {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline std::string format_kv(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

inline KeyValues parse_kv(std::string_view text) {
  KeyValues kv;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto sep = line.find(" = ");
    if (sep == std::string_view::npos) throw DataError("report line " + std::to_string(line_no) + ": expected key = value");
    kv.emplace_back(std::string(line.substr(0, sep)), std::string(line.substr(sep + 3)));
  }
  return kv;
}

inline std::string percent(double ratio, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, ratio * 100.0);
  return buf;
}

inline KeyValues report_entries(const RunReport& r, bool include_timing) {
  KeyValues kv;
  const auto& ev = r.evaluation;
  const auto& cm = ev.confusion;
  kv.emplace_back("accuracy", detail::format_double(ev.accuracy()));
  kv.emplace_back("correct", std::to_string(ev.correct));
  kv.emplace_back("total", std::to_string(ev.total));
  std::string labels;
  for (const auto& l : cm.labels) labels += (labels.empty() ? "" : ",") + l;
  kv.emplace_back("labels", labels);
  for (std::size_t i = 0; i < cm.labels.size(); ++i) {
    kv.emplace_back("count." + cm.labels[i], std::to_string(cm.row_sum(i)));
    for (std::size_t j = 0; j < cm.labels.size(); ++j) {
      kv.emplace_back("confusion." + cm.labels[i] + "." + cm.labels[j], std::to_string(cm.cells[i][j]));
    }
  }
  for (const auto& [label, st] : r.retention) {
    kv.emplace_back("retention." + label, detail::format_double(st.ratio()));
    kv.emplace_back("retention." + label + ".kept", std::to_string(st.kept));
    kv.emplace_back("retention." + label + ".total", std::to_string(st.total));
  }
  kv.emplace_back("events", std::to_string(r.events));
  for (const auto& [k, v] : r.config) kv.emplace_back("config." + k, v);
  if (include_timing) {
    kv.emplace_back("wall_clock_s", detail::format_double(r.wall_clock_s));
    kv.emplace_back("throughput.events_per_s", detail::format_double(r.events_per_second()));
  }
  return kv;
}

inline std::string format_report(const RunReport& r, bool include_timing) {
  const auto& ev = r.evaluation;
  const auto& cm = ev.confusion;
  std::string out = "# evaluation report\n";
  out += "# accuracy " + percent(ev.accuracy(), 2) + "% (" + std::to_string(ev.correct) + "/" +
         std::to_string(ev.total) + ")\n";
  out += "# confusion (rows = true, columns = predicted):\n#   " + std::string(12, ' ');
  char buf[64];
  for (const auto& l : cm.labels) {
    std::snprintf(buf, sizeof(buf), " %10.10s", l.c_str());
    out += buf;
  }
  out += "\n";
  for (std::size_t i = 0; i < cm.labels.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "#   %-12.12s", cm.labels[i].c_str());
    out += buf;
    for (std::size_t j = 0; j < cm.labels.size(); ++j) {
      std::snprintf(buf, sizeof(buf), " %10zu", cm.cells[i][j]);
      out += buf;
    }
    out += "\n";
  }
  for (const auto& [label, st] : r.retention) {
    out += "# retention " + label + ": " + percent(st.ratio(), 2) + "% of " + std::to_string(st.total) + " events\n";
  }
  return out + format_kv(report_entries(r, include_timing));
}

}  // namespace evgest
