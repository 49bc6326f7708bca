#pragma once

// Pipeline configuration as flat "key = value" text.
//
//   # comment
//   name = E5
//   dbs.enabled = true
//   dbs.grid = 3x3
//   dbs.tau_b_us = 300
//   dbs.alpha = 2
//   input.merge_polarity = true
//   input.channels = 2
//   layers.1.n = 8
//   layers.1.r = 2
//   layers.1.tau_us = 10000
//   layers.1.reinit_window = 10000     (optional, defaults to train.reinit_window)
//   pooling.grid = 1x1
//   knn.k = 7
//   train.epochs = 1
//   train.mode = joint                 (joint | sequential)
//   train.reinit_window = 10000
//   seed = 1
//
// Layers are numbered from 1 without gaps. Unknown or repeated keys are
// errors.

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evgest/background_suppression.hpp"
#include "evgest/classifier.hpp"
#include "evgest/error.hpp"
#include "evgest/hots.hpp"

namespace evgest {

struct LayerSpec {
  std::uint32_t n = 8;
  std::uint32_t radius = 2;
  std::uint64_t tau_us = 10'000;
  std::optional<std::uint64_t> reinit_window;
};

struct PipelineConfig {
  std::string name;
  std::optional<DbsConfig> dbs;
  bool merge_polarity = true;
  std::uint32_t input_channels = 2;
  std::vector<LayerSpec> layers;
  PoolingConfig pooling;
  std::uint32_t k = 7;
  std::uint32_t epochs = 1;
  TrainingMode mode = TrainingMode::kJoint;
  std::uint64_t reinit_window = 10'000;
  std::uint64_t seed = 1;

  NetworkConfig network_config() const {
    NetworkConfig nc;
    nc.merge_polarity = merge_polarity;
    std::uint32_t channels = merge_polarity ? 1 : input_channels;
    for (const auto& ls : layers) {
      LayerConfig lc;
      lc.n = ls.n;
      lc.radius = ls.radius;
      lc.tau_us = static_cast<double>(ls.tau_us);
      lc.in_channels = channels;
      lc.reinit_window = ls.reinit_window.value_or(reinit_window);
      nc.layers.push_back(lc);
      channels = ls.n;
    }
    return nc;
  }

  void validate() const {
    if (dbs) dbs->validate();
    if (input_channels < 1) throw ContractError("input.channels must be >= 1");
    network_config().validate();
    pooling.validate();
    if (k < 1) throw ContractError("knn.k must be >= 1");
    if (epochs < 1) throw ContractError("train.epochs must be >= 1");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

class ConfigValue {
 public:
  ConfigValue(std::string key, std::string value, std::size_t line)
      : key_(std::move(key)), value_(std::move(value)), line_(line) {}

  [[noreturn]] void fail(const std::string& expected) const {
    throw DataError("config line " + std::to_string(line_) + ": " + key_ + " = '" + value_ + "' is not " + expected);
  }

  std::uint64_t as_u64() const {
    std::uint64_t v = 0;
    if (!parse_uint(value_, v)) fail("a non-negative integer");
    return v;
  }

  std::uint32_t as_u32() const {
    const std::uint64_t v = as_u64();
    if (v > UINT32_MAX) fail("a 32-bit integer");
    return static_cast<std::uint32_t>(v);
  }

  double as_double() const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value_.data(), value_.data() + value_.size(), v);
    if (value_.empty() || ec != std::errc{} || ptr != value_.data() + value_.size()) fail("a number");
    return v;
  }

  bool as_bool() const {
    if (value_ == "true") return true;
    if (value_ == "false") return false;
    fail("true or false");
  }

  std::pair<std::uint32_t, std::uint32_t> as_grid() const {
    const auto x = value_.find('x');
    std::uint32_t r = 0, c = 0;
    if (x == std::string::npos || !parse_uint(std::string_view(value_).substr(0, x), r) ||
        !parse_uint(std::string_view(value_).substr(x + 1), c)) {
      fail("a grid like 3x3");
    }
    return {r, c};
  }

  const std::string& str() const { return value_; }

 private:
  std::string key_;
  std::string value_;
  std::size_t line_;
};

}  // namespace detail

inline PipelineConfig parse_config(std::string_view text) {
  std::map<std::string, detail::ConfigValue> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(detail::trim(line.substr(0, eq)));
    std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw DataError("config line " + std::to_string(line_no) + ": empty key");
    if (entries.count(key)) throw DataError("config line " + std::to_string(line_no) + ": duplicate key " + key);
    entries.emplace(key, detail::ConfigValue(key, value, line_no));
  }

  PipelineConfig cfg;
  DbsConfig dbs;
  bool dbs_enabled = false;
  std::map<std::uint32_t, LayerSpec> layers;
  std::map<std::uint32_t, std::uint32_t> layer_keys;

  for (const auto& [key, v] : entries) {
    if (key == "name") {
      cfg.name = v.str();
    } else if (key == "dbs.enabled") {
      dbs_enabled = v.as_bool();
    } else if (key == "dbs.grid") {
      std::tie(dbs.grid_rows, dbs.grid_cols) = v.as_grid();
    } else if (key == "dbs.tau_b_us") {
      dbs.tau_b_us = v.as_double();
    } else if (key == "dbs.alpha") {
      dbs.alpha = v.as_double();
    } else if (key == "input.merge_polarity") {
      cfg.merge_polarity = v.as_bool();
    } else if (key == "input.channels") {
      cfg.input_channels = v.as_u32();
    } else if (key == "pooling.grid") {
      std::tie(cfg.pooling.grid_rows, cfg.pooling.grid_cols) = v.as_grid();
    } else if (key == "knn.k") {
      cfg.k = v.as_u32();
    } else if (key == "train.epochs") {
      cfg.epochs = v.as_u32();
    } else if (key == "train.mode") {
      if (v.str() == "joint") {
        cfg.mode = TrainingMode::kJoint;
      } else if (v.str() == "sequential") {
        cfg.mode = TrainingMode::kSequential;
      } else {
        v.fail("joint or sequential");
      }
    } else if (key == "train.reinit_window") {
      cfg.reinit_window = v.as_u64();
    } else if (key == "seed") {
      cfg.seed = v.as_u64();
    } else if (key.rfind("layers.", 0) == 0) {
      const std::string_view rest = std::string_view(key).substr(7);
      const auto dot = rest.find('.');
      std::uint32_t idx = 0;
      if (dot == std::string_view::npos || !detail::parse_uint(rest.substr(0, dot), idx) || idx < 1) {
        throw DataError("config: bad layer key " + key);
      }
      const std::string_view field = rest.substr(dot + 1);
      LayerSpec& ls = layers[idx];
      if (field == "n") {
        ls.n = v.as_u32();
      } else if (field == "r") {
        ls.radius = v.as_u32();
      } else if (field == "tau_us") {
        ls.tau_us = v.as_u64();
      } else if (field == "reinit_window") {
        ls.reinit_window = v.as_u64();
      } else {
        throw DataError("config: unknown key " + key);
      }
      ++layer_keys[idx];
    } else {
      throw DataError("config: unknown key " + key);
    }
  }

  std::uint32_t expect = 1;
  for (const auto& [idx, ls] : layers) {
    if (idx != expect++) throw DataError("config: layers must be numbered 1, 2, ... without gaps");
    cfg.layers.push_back(ls);
  }
  if (cfg.layers.empty()) throw DataError("config: at least one layer (layers.1.*) is required");
  if (dbs_enabled) cfg.dbs = dbs;
  try {
    cfg.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return cfg;
}

// Canonical, fully explicit rendering; parse_config(format_config(c)) == c.
inline std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto grid = [](std::uint32_t r, std::uint32_t c) { return std::to_string(r) + "x" + std::to_string(c); };
  if (!cfg.name.empty()) kv.emplace_back("name", cfg.name);
  kv.emplace_back("dbs.enabled", cfg.dbs ? "true" : "false");
  const DbsConfig dbs = cfg.dbs.value_or(DbsConfig{});
  kv.emplace_back("dbs.grid", grid(dbs.grid_rows, dbs.grid_cols));
  kv.emplace_back("dbs.tau_b_us", detail::format_double(dbs.tau_b_us));
  kv.emplace_back("dbs.alpha", detail::format_double(dbs.alpha));
  kv.emplace_back("input.merge_polarity", cfg.merge_polarity ? "true" : "false");
  kv.emplace_back("input.channels", std::to_string(cfg.input_channels));
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const std::string p = "layers." + std::to_string(i + 1) + ".";
    kv.emplace_back(p + "n", std::to_string(cfg.layers[i].n));
    kv.emplace_back(p + "r", std::to_string(cfg.layers[i].radius));
    kv.emplace_back(p + "tau_us", std::to_string(cfg.layers[i].tau_us));
    if (cfg.layers[i].reinit_window) {
      kv.emplace_back(p + "reinit_window", std::to_string(*cfg.layers[i].reinit_window));
    }
  }
  kv.emplace_back("pooling.grid", grid(cfg.pooling.grid_rows, cfg.pooling.grid_cols));
  kv.emplace_back("knn.k", std::to_string(cfg.k));
  kv.emplace_back("train.epochs", std::to_string(cfg.epochs));
  kv.emplace_back("train.mode", cfg.mode == TrainingMode::kJoint ? "joint" : "sequential");
  kv.emplace_back("train.reinit_window", std::to_string(cfg.reinit_window));
  kv.emplace_back("seed", std::to_string(cfg.seed));
  return kv;
}

inline std::string format_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace evgest
