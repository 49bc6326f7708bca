#include <gtest/gtest.h>

#include <cmath>

#include "evgest/background_suppression.hpp"
#include "evgest/synth.hpp"
#include "oracles.hpp"

using namespace evgest;

TEST(CellIndex, Examples) {
  const SensorGeometry atis{304, 240, 2};
  EXPECT_EQ(cell_index(0, 0, atis, 3, 3), (GridCell{0, 0}));
  EXPECT_EQ(cell_index(303, 239, atis, 3, 3), (GridCell{2, 2}));
  EXPECT_EQ(cell_index(4, 4, {9, 9, 1}, 3, 3), (GridCell{1, 1}));
  EXPECT_THROW(cell_index(304, 0, atis, 3, 3), ContractError);
}

TEST(CellIndex, MatchesIndependentRule) {
  for (std::uint32_t w : {1u, 2u, 7u, 64u, 304u}) {
    for (std::uint32_t parts : {1u, 2u, 3u, 5u, 8u}) {
      for (std::uint32_t x = 0; x < w; ++x) {
        EXPECT_EQ(cell_index(x, 0, {w, 1, 1}, 1, parts).col, oracle::axis_cell(x, w, parts)) << w << " " << parts;
      }
    }
  }
}

TEST(UpdateActivity, Examples) {
  CellState fresh;
  EXPECT_EQ(update_activity(fresh, 123456, 300.0), 1.0);

  CellState c;
  update_activity(c, 0, 300.0);
  EXPECT_NEAR(update_activity(c, 300, 300.0), std::exp(-1.0) + 1.0, 1e-12);
  EXPECT_NEAR(c.activity, 1.367879, 1e-6);

  CellState same;
  update_activity(same, 10, 300.0);
  EXPECT_EQ(same.activity, 1.0);
  update_activity(same, 10, 300.0);
  EXPECT_EQ(same.activity, 2.0);

  EXPECT_THROW(update_activity(same, 9, 300.0), ContractError);
}

TEST(DbsFilter, FirstEventKept) {
  DbsFilter f({}, {304, 240, 2});
  EXPECT_EQ(f.process({0, 10, 10, 0}), DbsDecision::kKeep);
  EXPECT_NEAR(f.mean_activity(0), 1.0 / 9.0, 1e-15);
}

TEST(DbsFilter, ConcentratedActivityKept) {
  DbsFilter f({}, {9, 9, 1});
  for (Timestamp t = 0; t < 50; ++t) EXPECT_EQ(f.process({t * 10, 0, 0, 0}), DbsDecision::kKeep);
}

TEST(DbsFilter, EqualActivityDropped) {
  // One event per cell at the same time: after the ninth, every cell holds 1.
  DbsFilter f({}, {9, 9, 1});
  DbsDecision last = DbsDecision::kKeep;
  for (std::uint16_t r = 0; r < 3; ++r) {
    for (std::uint16_t c = 0; c < 3; ++c) last = f.process({100, static_cast<std::uint16_t>(3 * c), static_cast<std::uint16_t>(3 * r), 0});
  }
  EXPECT_EQ(f.mean_activity(100), 1.0);
  EXPECT_EQ(last, DbsDecision::kDrop);
}

TEST(DbsFilter, RejectsTimeRegression) {
  DbsFilter f({}, {9, 9, 1});
  f.process({10, 0, 0, 0});
  EXPECT_THROW(f.process({9, 8, 8, 0}), ContractError);
}

TEST(DbsConfig, Validation) {
  EXPECT_THROW(DbsFilter({0, 3, 300, 2}, {9, 9, 1}), ContractError);
  EXPECT_THROW(DbsFilter({3, 3, 0, 2}, {9, 9, 1}), ContractError);
  EXPECT_THROW(DbsFilter({3, 3, 300, 0}, {9, 9, 1}), ContractError);
}

TEST(FilterStream, EmptyStream) {
  DbsFilter f({}, {304, 240, 2});
  const auto r = filter_stream(f, {{304, 240, 2}, {}});
  EXPECT_TRUE(r.kept.empty());
  EXPECT_EQ(r.stats.kept, 0u);
  EXPECT_EQ(r.stats.total, 0u);
}

TEST(FilterStream, DeterministicAndSubsequence) {
  Rng rng(5);
  const auto s = oracle::random_stream(rng, {64, 48, 2}, 20'000, 40);
  DbsFilter a({}, s.geometry), b({}, s.geometry);
  const auto ra = filter_stream(a, s);
  const auto rb = filter_stream(b, s);
  EXPECT_EQ(ra.kept, rb.kept);
  std::size_t j = 0;
  for (const Event& e : s.events) {
    if (j < ra.kept.size() && ra.kept.events[j] == e) ++j;
  }
  EXPECT_EQ(j, ra.kept.size());
  EXPECT_EQ(ra.stats.total, s.size());
}

TEST(DbsProperty, ActivityShape) {
  // Activity decays between a cell's events and jumps by exactly one at each.
  Rng rng(8);
  CellState c;
  Timestamp t = 0;
  double before = 0.0;
  for (int i = 0; i < 1000; ++i) {
    t += rng.below(2000);
    const double decayed = decayed_activity(c, t, 300.0);
    EXPECT_LE(decayed, before + 1e-15);
    const double after = update_activity(c, t, 300.0);
    EXPECT_NEAR(after - decayed, 1.0, 1e-12);
    before = after;
  }
}

TEST(DbsProperty, MatchesOracleOnRandomStreams) {
  Rng rng(21);
  for (int trial = 0; trial < 8; ++trial) {
    const SensorGeometry g{static_cast<std::uint32_t>(1 + rng.below(128)), static_cast<std::uint32_t>(1 + rng.below(128)), 2};
    const DbsConfig cfg{static_cast<std::uint32_t>(1 + rng.below(5)), static_cast<std::uint32_t>(1 + rng.below(5)),
                        50.0 + rng.uniform() * 1000.0, 0.5 + rng.uniform() * 2.5};
    const auto s = oracle::random_stream(rng, g, 5000, rng.below(200));
    DbsFilter f(cfg, g);
    EXPECT_EQ(filter_decisions(f, s), oracle::dbs_decisions(s, cfg.grid_rows, cfg.grid_cols, cfg.tau_b_us, cfg.alpha))
        << "trial " << trial;
  }
}

TEST(DbsProperty, TemporalScaleInvariance) {
  Rng rng(4);
  const auto s = oracle::random_stream(rng, {64, 64, 1}, 20'000, 100);
  for (Timestamp k : {2ull, 8ull}) {
    EventStream scaled = s;
    for (auto& e : scaled.events) e.t *= k;
    DbsFilter a({3, 3, 300.0, 2.0}, s.geometry), b({3, 3, 300.0 * static_cast<double>(k), 2.0}, s.geometry);
    EXPECT_EQ(filter_decisions(a, s), filter_decisions(b, scaled)) << "k=" << k;
  }
}

TEST(DbsProperty, SingleCellGrid) {
  Rng rng(6);
  const auto s = oracle::random_stream(rng, {32, 32, 2}, 2000, 500);
  for (double alpha : {0.25, 1.0}) {
    DbsFilter f({1, 1, 300.0, alpha}, s.geometry);
    EXPECT_EQ(filter_stream(f, s).stats.kept, s.size()) << alpha;
  }
  for (double alpha : {1.0001, 2.0}) {
    DbsFilter f({1, 1, 300.0, alpha}, s.geometry);
    EXPECT_EQ(filter_stream(f, s).stats.kept, 0u) << alpha;
  }
}

TEST(DbsProperty, CompositeSceneSeparation) {
  const auto scene = gen_composite_scene({304, 240, 2}, 350'000, 15'000.0, 20.0, 3);
  DbsFilter f({}, scene.stream.geometry);
  const auto keep = filter_decisions(f, scene.stream);
  RetentionStats fg, bg;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    auto& st = scene.tags[i] == Provenance::kForeground ? fg : bg;
    ++st.total;
    st.kept += keep[i];
  }
  EXPECT_GT(fg.total, 0u);
  EXPECT_GT(bg.total, 0u);
  EXPECT_GE(fg.ratio(), 0.90);
  EXPECT_LE(bg.ratio(), 0.10);
}
