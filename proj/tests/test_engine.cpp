// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "scube/datagen.hpp"
#include "scube/engine.hpp"

using namespace scube;
using namespace scube::testing;

namespace {

QuerySpec make_query(std::string id, MetricKind kind, Duration window, Duration step,
                     Trigger trigger = {TriggerKind::DataDriven, 0}) {
  QuerySpec spec;
  spec.id = std::move(id);
  spec.metric = std::move(kind);
  spec.group_by = {"acctId"};
  spec.window_size = window;
  spec.window_step = step;
  spec.trigger = trigger;
  return spec;
}

TransactionRecord make_record(Timestamp t, std::string acct, int64_t amt, std::string city = "SH") {
  TransactionRecord rec;
  rec.trans_time = t;
  rec.acct_id = std::move(acct);
  rec.mer_id = "M1";
  rec.trans_amt = amt;
  rec.city = std::move(city);
  return rec;
}

std::vector<TransactionRecord> desk_dataset(int days, int per_day, uint64_t seed) {
  GenConfig cfg;
  cfg.days = days;
  cfg.records_per_day = per_day;
  cfg.n_accounts = 40;
  cfg.n_merchants = 10;
  cfg.n_cities = 12;
  cfg.seed = seed;
  return generate_vector(cfg);
}

void check_against_oracle(const CubeEngine& engine, const std::string& id,
                          std::span<const TransactionRecord> records, const WindowResult& result) {
  const QuerySpec& spec = engine.query(id);
  auto expected = oracle_window(records, spec.metric, spec.group_by, result.window_start,
                                result.window_end);
  REQUIRE(result.values.size() == expected.size());
  for (const auto& [key, value] : result.values) {
    REQUIRE(expected.count(key.value) == 1);
    CHECK_MESSAGE(oracle_value_equal(spec.metric, value, expected.at(key.value)),
                  id, " key ", key.value, ": engine ", value, " oracle ", expected.at(key.value));
  }
}

}  // namespace

TEST_CASE("query registration validates specs") {
  CubeEngine engine;
  CHECK(engine.register_query(make_query("daily_avg", metric_avg("transAmt"), kDay, kDay)) ==
        "daily_avg");
  CHECK(engine.register_query(make_query("cities_90d", metric_distinct("city"), 90 * kDay, kDay)) ==
        "cities_90d");
  CHECK_THROWS_AS(engine.register_query(make_query("daily_avg", metric_count(), kDay, kDay)),
                  DuplicateQuery);
  CHECK_THROWS_AS(engine.register_query(make_query("bad_step", metric_count(), kDay, 2 * kDay)),
                  InvalidSpec);
  CHECK_THROWS_AS(
      engine.register_query(make_query("bad_field", metric_avg("noSuchField"), kDay, kDay)),
      InvalidSpec);

  SUBCASE("incompatible step on a fixed-granularity engine") {
    EngineConfig cfg;
    cfg.granularity = kDay;
    CubeEngine fixed(cfg);
    CHECK_THROWS_AS(
        fixed.register_query(make_query("odd_step", metric_count(), kDay, 7 * kHour)),
        GranularityMismatch);
  }

  SUBCASE("registration after first ingest must match the derived granularity") {
    CubeEngine live;
    live.register_query(make_query("daily", metric_count(), kDay, kDay));
    live.ingest(make_record(10, "A", 5));
    CHECK_THROWS_AS(live.register_query(make_query("hourly", metric_count(), kHour, kHour)),
                    GranularityMismatch);
    CHECK(live.register_query(make_query("weekly", metric_count(), 7 * kDay, kDay)) == "weekly");
  }
}

TEST_CASE("granularity is derived from every registered query") {
  CubeEngine engine;
  engine.register_query(make_query("a", metric_sum("transAmt"), 5 * kHour, kHour));
  engine.register_query(make_query("b", metric_sum("transAmt"), 4 * kHour, 2 * kHour));
  engine.ingest(make_record(0, "A", 1));
  CHECK(engine.granularity() == kHour);
}

TEST_CASE("data-driven ingest emits fresh per-key values") {
  CubeEngine engine;
  engine.register_query(make_query("daily_avg", metric_avg("transAmt"), kDay, kDay));

  auto first = engine.ingest(make_record(100, "A", 100));
  REQUIRE(first.size() == 1);
  REQUIRE(first[0].values.size() == 1);
  CHECK(first[0].values[0].second == 100.0);
  CHECK(first[0].window_start == 0);
  CHECK(first[0].window_end == kDay);

  auto second = engine.ingest(make_record(200, "A", 200));
  REQUIRE(second.size() == 1);
  CHECK(second[0].values[0].second == 150.0);
  CHECK(!second[0].revised);

  // Another key gets its own delta and does not disturb A.
  auto other = engine.ingest(make_record(300, "B", 40));
  REQUIRE(other.size() == 1);
  CHECK(other[0].values[0].first.value == "B");
  CHECK(other[0].values[0].second == 40.0);
}

TEST_CASE("late records are dropped past the lateness horizon") {
  CubeEngine engine;
  engine.register_query(make_query("daily_avg", metric_avg("transAmt"), kDay, kDay));
  engine.ingest(make_record(10 * kDay, "A", 100));
  auto emissions = engine.ingest(make_record(5, "A", 999));  // 10 days late, lateness 0
  CHECK(emissions.empty());
  CHECK(engine.counters().dropped_late == 1);
  CHECK(engine.counters().ingested == 1);
  // No state change: the old window is untouched.
  CHECK(engine.evaluate_window("daily_avg", kDay).values.empty());
}

TEST_CASE("admissible late records update state and emit revised results") {
  EngineConfig cfg;
  cfg.allowed_lateness = kHour;
  CubeEngine engine(cfg);
  engine.register_query(make_query("daily_sum", metric_sum("transAmt"), kDay, kDay));
  engine.ingest(make_record(kHour, "A", 10));
  engine.ingest(make_record(2 * kHour, "A", 10));
  auto emissions = engine.ingest(make_record(2 * kHour - kMinute, "A", 5));  // within lateness
  REQUIRE(emissions.size() == 1);
  CHECK(emissions[0].revised);
  CHECK(emissions[0].values[0].second == 25.0);
  CHECK(engine.counters().dropped_late == 0);
  CHECK(engine.counters().ingested == 3);
}

TEST_CASE("window evaluation equals brute-force recomputation") {
  const auto records = desk_dataset(6, 1500, 11);
  CubeEngine engine;
  engine.register_query(make_query("avg1d", metric_avg("transAmt"), kDay, kDay,
                                   {TriggerKind::ClockDriven, kDay}));
  engine.register_query(make_query("cities3d", metric_distinct("city"), 3 * kDay, kDay,
                                   {TriggerKind::ClockDriven, kDay}));
  engine.register_query(make_query("var2d", metric_variance("transAmt"), 2 * kDay, kDay,
                                   {TriggerKind::ClockDriven, kDay}));
  engine.ingest_batch(records);

  for (Timestamp end : {kDay, 3 * kDay, 6 * kDay}) {
    for (const auto* id : {"avg1d", "cities3d", "var2d"}) {
      check_against_oracle(engine, id, records, engine.evaluate_window(id, end));
    }
  }

  SUBCASE("windows covering no slices are empty") {
    CHECK(engine.evaluate_window("avg1d", 40 * kDay).values.empty());
  }
  SUBCASE("alignment and identity errors") {
    CHECK_THROWS_AS(engine.evaluate_window("avg1d", kDay + 7), AlignmentError);
    CHECK_THROWS_AS(engine.evaluate_window("nope", kDay), UnknownQuery);
  }
}

TEST_CASE("arbitrary aligned ranges evaluate like windows") {
  const auto records = desk_dataset(4, 1200, 23);
  CubeEngine engine;
  engine.register_query(make_query("hourly_count", metric_count(), kHour, kHour,
                                   {TriggerKind::ClockDriven, kDay}));
  engine.ingest_batch(records);

  // 13h of slices, aligned.
  auto r = engine.evaluate_range("hourly_count", 5 * kHour, 18 * kHour);
  check_against_oracle(engine, "hourly_count", records, r);

  // A single slice equals that slice's finalized values.
  auto one = engine.evaluate_range("hourly_count", 7 * kHour, 8 * kHour);
  check_against_oracle(engine, "hourly_count", records, one);

  // Full retained history for count conserves the ingested total.
  auto all = engine.evaluate_range("hourly_count", 0, 4 * kDay);
  double total = 0;
  for (const auto& [key, value] : all.values) total += value;
  CHECK(total == static_cast<double>(engine.counters().ingested));

  CHECK_THROWS_AS(engine.evaluate_range("hourly_count", 3 * kHour, 3 * kHour), InvalidRange);
  CHECK_THROWS_AS(engine.evaluate_range("hourly_count", 30, kDay), AlignmentError);
}

TEST_CASE("window sharing: overlapping queries update each partial once") {
  CubeEngine engine;
  engine.register_query(make_query("five_hours", metric_sum("transAmt"), 5 * kHour, kHour));
  engine.register_query(make_query("four_hours", metric_sum("transAmt"), 4 * kHour, kHour));

  std::mt19937_64 rng(3);
  const int n = 500;
  std::vector<Timestamp> times(n);
  for (auto& t : times) t = 12 * kHour + static_cast<Timestamp>(rng() % (5 * kHour));
  std::sort(times.begin(), times.end());
  for (Timestamp t : times)
    engine.ingest(make_record(t, "A" + std::to_string(rng() % 5), 10));
  // Two queries, one metric slot: exactly one update per record.
  CHECK(engine.counters().update_calls == static_cast<uint64_t>(n));
  CHECK(engine.store().slot_count() == 1);

  const uint64_t updates_before = engine.counters().update_calls;
  auto five = engine.evaluate_window("five_hours", 17 * kHour);
  auto four = engine.evaluate_range("four_hours", 12 * kHour, 16 * kHour);
  CHECK(engine.counters().update_calls == updates_before);  // evaluation reads, never recomputes
  CHECK(engine.counters().partial_reads > 0);
  CHECK(!five.values.empty());
  CHECK(!four.values.empty());
}

TEST_CASE("clock-driven queries emit at every crossed boundary") {
  CubeEngine engine;
  engine.register_query(make_query("hourly", metric_count(), kHour, kHour,
                                   {TriggerKind::ClockDriven, kHour}));
  for (int h = 0; h < 8; ++h)
    engine.ingest(make_record(h * kHour + kMinute, "A", 1));

  auto none = engine.advance_clock(30 * kMinute);
  CHECK(none.empty());  // no boundary crossed yet

  auto three = engine.advance_clock(3 * kHour + 30 * kMinute);
  REQUIRE(three.size() == 3);  // boundaries at 1h, 2h, 3h
  for (const auto& r : three) {
    auto direct = engine.evaluate_window("hourly", r.window_end);
    REQUIRE(direct.values.size() == r.values.size());
    for (size_t i = 0; i < r.values.size(); ++i) {
      CHECK(r.values[i].first == direct.values[i].first);
      CHECK(r.values[i].second == direct.values[i].second);
    }
  }
  CHECK(engine.advance_clock(3 * kHour + 45 * kMinute).empty());
  CHECK_THROWS_AS(engine.advance_clock(kHour), ClockError);
}

TEST_CASE("finish flushes the remaining complete windows") {
  CubeEngine engine;
  engine.register_query(make_query("daily", metric_count(), kDay, kDay,
                                   {TriggerKind::ClockDriven, kDay}));
  QuerySpec fixed = make_query("fixed", metric_sum("transAmt"), kDay, kDay);
  fixed.time_range = {{kDay, 3 * kDay}};
  engine.register_query(fixed);

  for (int d = 0; d < 3; ++d)
    for (int i = 0; i < 4; ++i)
      engine.ingest(make_record(d * kDay + i * kHour, "A", 10));

  auto flushed = engine.finish();
  int daily_emissions = 0;
  bool saw_fixed = false;
  for (const auto& r : flushed) {
    if (r.query_id == "daily") {
      ++daily_emissions;
      CHECK(r.values[0].second == 4.0);
    } else {
      saw_fixed = true;
      CHECK(r.window_start == kDay);
      CHECK(r.window_end == 3 * kDay);
      CHECK(r.values[0].second == 80.0);
    }
  }
  CHECK(daily_emissions == 3);
  CHECK(saw_fixed);
}

TEST_CASE("ingestion order within a slice does not change non-run results") {
  auto records = desk_dataset(2, 800, 77);
  CubeEngine a;
  // The permuted copy arrives out of order within each day, so give that
  // engine a day of lateness; nothing may be dropped.
  EngineConfig lenient;
  lenient.allowed_lateness = kDay;
  CubeEngine b(lenient);
  for (auto* engine : {&a, &b}) {
    engine->register_query(make_query("avg", metric_avg("transAmt"), kDay, kDay,
                                      {TriggerKind::ClockDriven, kDay}));
    engine->register_query(make_query("cities", metric_distinct("city"), kDay, kDay,
                                      {TriggerKind::ClockDriven, kDay}));
  }
  a.ingest_batch(records);

  // Shuffle within each day, then re-sort days only: same multiset per slice.
  std::mt19937_64 rng(5);
  std::shuffle(records.begin(), records.end(), rng);
  std::stable_sort(records.begin(), records.end(), [](const auto& x, const auto& y) {
    return floor_div(x.trans_time, kDay) < floor_div(y.trans_time, kDay);
  });
  for (const auto& rec : records) b.ingest(rec);
  CHECK(b.counters().dropped_late == 0);

  for (const auto* id : {"avg", "cities"}) {
    for (Timestamp end : {kDay, 2 * kDay}) {
      auto ra = a.evaluate_window(id, end);
      auto rb = b.evaluate_window(id, end);
      REQUIRE(ra.values.size() == rb.values.size());
      for (size_t i = 0; i < ra.values.size(); ++i) {
        CHECK(ra.values[i].first == rb.values[i].first);
        CHECK(ra.values[i].second == doctest::Approx(rb.values[i].second).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("sweep evaluation matches window-by-window evaluation") {
  const auto records = desk_dataset(8, 600, 42);
  CubeEngine engine;
  engine.register_query(make_query("avg3d", metric_avg("transAmt"), 3 * kDay, kDay,
                                   {TriggerKind::ClockDriven, kDay}));
  engine.register_query(make_query("cities2d", metric_distinct("city"), 2 * kDay, kDay,
                                   {TriggerKind::ClockDriven, kDay}));
  engine.register_query(make_query("runs4d", metric_run("transAmt", RunDirection::Increasing),
                                   4 * kDay, kDay, {TriggerKind::ClockDriven, kDay}));
  engine.ingest_batch(records);

  for (const auto* id : {"avg3d", "cities2d", "runs4d"}) {
    const auto swept = engine.evaluate_all_windows(id);
    REQUIRE(!swept.empty());
    for (const auto& window : swept) {
      auto direct = engine.evaluate_range(id, window.window_start, window.window_end);
      REQUIRE(direct.values.size() == window.values.size());
      for (size_t i = 0; i < window.values.size(); ++i) {
        CHECK(window.values[i].first == direct.values[i].first);
        CHECK(window.values[i].second == direct.values[i].second);
      }
      check_against_oracle(engine, id, records, window);
    }
  }
}

TEST_CASE("sweep handles sparse keys that vanish and reappear") {
  std::mt19937_64 rng(321);
  std::vector<TransactionRecord> records;
  // A handful of keys, each present in scattered hours over 4 days.
  for (int h = 0; h < 96; ++h) {
    if (rng() % 3 == 0) continue;  // empty slices
    const int hits = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < hits; ++i)
      records.push_back(make_record(h * kHour + static_cast<Timestamp>(i),
                                    "K" + std::to_string(rng() % 4),
                                    static_cast<int64_t>(rng() % 1000),
                                    "C" + std::to_string(rng() % 5)));
  }
  CubeEngine engine;
  engine.register_query(make_query("var5h", metric_variance("transAmt"), 5 * kHour, kHour,
                                   {TriggerKind::ClockDriven, kDay}));
  engine.register_query(make_query("run7h", metric_run("transAmt", RunDirection::Decreasing),
                                   7 * kHour, kHour, {TriggerKind::ClockDriven, kDay}));
  engine.register_query(make_query("cities9h", metric_distinct("city"), 9 * kHour, kHour,
                                   {TriggerKind::ClockDriven, kDay}));
  for (const auto& rec : records) engine.ingest(rec);

  for (const auto* id : {"var5h", "run7h", "cities9h"}) {
    for (const auto& window : engine.evaluate_all_windows(id)) {
      auto direct = engine.evaluate_range(id, window.window_start, window.window_end);
      REQUIRE(direct.values.size() == window.values.size());
      for (size_t i = 0; i < window.values.size(); ++i) {
        CHECK(window.values[i].first == direct.values[i].first);
        CHECK(window.values[i].second == direct.values[i].second);
      }
      check_against_oracle(engine, id, records, window);
    }
  }
}

TEST_CASE("parallel batch ingestion is deterministic") {
  const auto records = desk_dataset(3, 1000, 9);
  EngineConfig four;
  four.shards = 4;
  CubeEngine parallel(four);
  EngineConfig one;
  one.shards = 1;
  CubeEngine serial(one);
  for (auto* engine : {&parallel, &serial}) {
    engine->register_query(make_query("avg", metric_avg("transAmt"), kDay, kDay,
                                      {TriggerKind::ClockDriven, kDay}));
    engine->register_query(make_query("runs", metric_run("transAmt", RunDirection::Increasing),
                                      kDay, kDay, {TriggerKind::ClockDriven, kDay}));
  }
  parallel.ingest_batch(records);
  for (const auto& rec : records) serial.ingest(rec);

  CHECK(parallel.counters().ingested == serial.counters().ingested);
  CHECK(parallel.counters().update_calls == serial.counters().update_calls);
  for (const auto* id : {"avg", "runs"}) {
    for (Timestamp end : {kDay, 3 * kDay}) {
      auto p = parallel.evaluate_window(id, end);
      auto s = serial.evaluate_window(id, end);
      REQUIRE(p.values.size() == s.values.size());
      for (size_t i = 0; i < p.values.size(); ++i) {
        CHECK(p.values[i].first == s.values[i].first);
        CHECK(p.values[i].second == s.values[i].second);
      }
    }
  }
}

TEST_CASE("point lookups agree with window evaluation") {
  const auto records = desk_dataset(2, 500, 55);
  CubeEngine engine;
  engine.register_query(make_query("avg", metric_avg("transAmt"), kDay, kDay,
                                   {TriggerKind::ClockDriven, kDay}));
  engine.ingest_batch(records);
  auto window = engine.evaluate_window("avg", kDay);
  REQUIRE(!window.values.empty());
  for (const auto& [key, value] : window.values) {
    auto direct = engine.point_lookup("avg", key, kDay);
    REQUIRE(direct.has_value());
    CHECK(*direct == value);
  }
  CHECK(!engine.point_lookup("avg", DimensionKey{"missing"}, kDay).has_value());
}

TEST_CASE("the result sink sees every triggered emission") {
  CubeEngine engine;
  engine.register_query(make_query("daily", metric_count(), kDay, kDay,
                                   {TriggerKind::ClockDriven, kDay}));
  engine.register_query(make_query("live_avg", metric_avg("transAmt"), kDay, kDay));
  size_t delivered = 0;
  engine.on_result([&](const WindowResult&) { ++delivered; });

  size_t returned = 0;
  for (int d = 0; d < 2; ++d)
    for (int i = 0; i < 3; ++i) {
      returned += engine.ingest(make_record(d * kDay + i * kHour, "A", 10)).size();
      returned += engine.advance_clock(engine.watermark()).size();
    }
  returned += engine.finish().size();
  CHECK(delivered == returned);
  CHECK(delivered > 0);
}

TEST_CASE("conservation holds after mixed ingestion") {
  const auto records = desk_dataset(3, 700, 31);
  CubeEngine engine;
  engine.register_query(make_query("count", metric_count(), kDay, kDay,
                                   {TriggerKind::ClockDriven, kDay}));
  // Interleave a hopeless late record.
  size_t i = 0;
  for (const auto& rec : records) {
    engine.ingest(rec);
    if (++i == records.size() / 2) engine.ingest(make_record(0, "A", 1));
  }
  const auto c = engine.counters();
  CHECK(c.ingested + c.dropped_late == records.size() + 1);
  CHECK(engine.store().total_records() == c.ingested);
  CHECK(engine.watermark() == records.back().trans_time);
}
