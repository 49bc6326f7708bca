#pragma once

// Dynamic background suppression.
//
// The pixel array is tiled by a coarse grid. Each cell keeps an activity
// counter that decays exponentially with time constant tau_b and jumps by one
// at each event in the cell. An event is kept iff its cell's activity, after
// the update, is at least alpha times the mean activity of all cells decayed
// to the event time. Cells that never fired contribute zero to the mean.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evgest/error.hpp"
#include "evgest/event.hpp"

namespace evgest {

struct GridCell {
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

// Cells tile the array; remainder pixels fall in the last row/col.
inline GridCell cell_index(std::uint32_t x, std::uint32_t y, const SensorGeometry& geometry, std::uint32_t grid_rows,
                           std::uint32_t grid_cols) {
  if (x >= geometry.width || y >= geometry.height) {
    throw ContractError("cell_index: pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") outside " +
                        std::to_string(geometry.width) + "x" + std::to_string(geometry.height));
  }
  auto row = static_cast<std::uint32_t>(std::uint64_t{y} * grid_rows / geometry.height);
  auto col = static_cast<std::uint32_t>(std::uint64_t{x} * grid_cols / geometry.width);
  return {std::min(row, grid_rows - 1), std::min(col, grid_cols - 1)};
}

struct DbsConfig {
  std::uint32_t grid_rows = 3;
  std::uint32_t grid_cols = 3;
  double tau_b_us = 300.0;
  double alpha = 2.0;

  void validate() const {
    if (grid_rows < 1 || grid_cols < 1) throw ContractError("dbs grid must be at least 1x1");
    if (!(tau_b_us > 0.0) || !std::isfinite(tau_b_us)) throw ContractError("dbs tau_b must be positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ContractError("dbs alpha must be positive");
  }
};

struct CellState {
  double activity = 0.0;
  std::optional<Timestamp> last_t;  // empty until the cell's first event
};

inline double decay_factor(Timestamp dt, double tau_us) { return std::exp(-(static_cast<double>(dt) / tau_us)); }

// Activity of `cell` seen at time t without modifying it.
inline double decayed_activity(const CellState& cell, Timestamp t, double tau_b_us) {
  if (!cell.last_t) return 0.0;
  return cell.activity * decay_factor(t - *cell.last_t, tau_b_us);
}

inline double update_activity(CellState& cell, Timestamp t, double tau_b_us) {
  if (!cell.last_t) {
    cell.activity = 1.0;
  } else {
    if (t < *cell.last_t) {
      throw ContractError("dbs: time regression in cell (t=" + std::to_string(t) +
                          " < last_t=" + std::to_string(*cell.last_t) + ")");
    }
    cell.activity = cell.activity * decay_factor(t - *cell.last_t, tau_b_us) + 1.0;
  }
  cell.last_t = t;
  return cell.activity;
}

enum class DbsDecision { kKeep, kDrop };

class DbsFilter {
 public:
  DbsFilter(const DbsConfig& config, const SensorGeometry& geometry)
      : config_(config), geometry_(geometry), cells_(std::size_t{config.grid_rows} * config.grid_cols) {
    config_.validate();
    check_geometry(geometry_);
  }

  const DbsConfig& config() const { return config_; }
  const SensorGeometry& geometry() const { return geometry_; }
  std::size_t cell_count() const { return cells_.size(); }
  const CellState& cell(GridCell c) const { return cells_[flat(c)]; }

  double mean_activity(Timestamp t) const {
    double sum = 0.0;
    for (const auto& c : cells_) sum += decayed_activity(c, t, config_.tau_b_us);
    return sum / static_cast<double>(cells_.size());
  }

  DbsDecision process(const Event& e) {
    if (last_t_ && e.t < *last_t_) {
      throw ContractError("dbs: event at t=" + std::to_string(e.t) + " after t=" + std::to_string(*last_t_));
    }
    const GridCell gc = cell_index(e.x, e.y, geometry_, config_.grid_rows, config_.grid_cols);
    const double a = update_activity(cells_[flat(gc)], e.t, config_.tau_b_us);
    last_t_ = e.t;
    return a >= config_.alpha * mean_activity(e.t) ? DbsDecision::kKeep : DbsDecision::kDrop;
  }

  void reset() {
    cells_.assign(cells_.size(), CellState{});
    last_t_.reset();
  }

 private:
  std::size_t flat(GridCell c) const { return std::size_t{c.row} * config_.grid_cols + c.col; }

  DbsConfig config_;
  SensorGeometry geometry_;
  std::vector<CellState> cells_;
  std::optional<Timestamp> last_t_;
};

struct RetentionStats {
  std::size_t kept = 0;
  std::size_t total = 0;

  double ratio() const { return total == 0 ? 0.0 : static_cast<double>(kept) / static_cast<double>(total); }

  RetentionStats& operator+=(const RetentionStats& o) {
    kept += o.kept;
    total += o.total;
    return *this;
  }
};

struct FilterResult {
  EventStream kept;
  RetentionStats stats;
};

inline FilterResult filter_stream(DbsFilter& filter, const EventStream& stream) {
  FilterResult out{{stream.geometry, {}}, {0, stream.events.size()}};
  for (const Event& e : stream.events) {
    if (filter.process(e) == DbsDecision::kKeep) out.kept.events.push_back(e);
  }
  out.stats.kept = out.kept.events.size();
  return out;
}

// Per-event keep flags (1 = keep), aligned with stream.events.
inline std::vector<std::uint8_t> filter_decisions(DbsFilter& filter, const EventStream& stream) {
  std::vector<std::uint8_t> keep;
  keep.reserve(stream.events.size());
  for (const Event& e : stream.events) keep.push_back(filter.process(e) == DbsDecision::kKeep ? 1 : 0);
  return keep;
}

}  // namespace evgest
