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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "scube/slice_store.hpp"

using namespace scube;
using namespace scube::testing;

namespace {

TransactionRecord make_record(Timestamp t, std::string acct, int64_t amt, std::string city) {
  TransactionRecord rec;
  rec.trans_time = t;
  rec.acct_id = std::move(acct);
  rec.mer_id = "M1";
  rec.trans_amt = amt;
  rec.city = std::move(city);
  return rec;
}

std::vector<TransactionRecord> random_records(size_t n, uint64_t seed, Duration span) {
  std::mt19937_64 rng(seed);
  std::vector<TransactionRecord> out;
  Timestamp t = 0;
  for (size_t i = 0; i < n; ++i) {
    t += static_cast<Timestamp>(rng() % static_cast<uint64_t>(span / n + 1));
    out.push_back(make_record(t, "A" + std::to_string(rng() % 7),
                              static_cast<int64_t>(rng() % 1000000),
                              "C" + std::to_string(rng() % 12)));
  }
  return out;
}

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "scube_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("granularity is the gcd of windows, steps and offsets") {
  // The two overlapping queries: 5h sliding hourly and 4h from 12:00.
  const GranularityTerm fig3[] = {{5 * kHour, 1 * kHour, 0}, {4 * kHour, 1 * kHour, 12 * kHour}};
  CHECK(compute_granularity(fig3) == kHour);

  const GranularityTerm single[] = {{kDay, kDay, 0}};
  CHECK(compute_granularity(single) == kDay);

  const GranularityTerm mixed[] = {{kDay, kDay, 0}, {4 * kHour, 4 * kHour, 0}};
  CHECK(compute_granularity(mixed) == 4 * kHour);

  CHECK_THROWS_AS(compute_granularity({}), InvalidSpec);
  const GranularityTerm bad[] = {{0, kHour, 0}};
  CHECK_THROWS_AS(compute_granularity(bad), InvalidSpec);
}

TEST_CASE("slice index uses half-open intervals") {
  CHECK(slice_index_for(3600000, kHour, 0) == 1);  // boundary belongs to the later slice
  CHECK(slice_index_for(3599999, kHour, 0) == 0);
  CHECK(slice_index_for(0, kHour, 0) == 0);
  CHECK(slice_index_for(kDay + 5, kHour, kDay) == 0);
  CHECK_THROWS_AS(slice_index_for(-1, kHour, 0), OutOfRange);
  CHECK_THROWS_AS(slice_index_for(5, 0, 0), InvalidSpec);
}

TEST_CASE("ingest creates keyed partials from identities") {
  SliceStore store({1, kDay, 0});
  const int sum_slot = store.register_metric(metric_sum("transAmt"), {"acctId"});
  const int distinct_slot = store.register_metric(metric_distinct("city"), {"acctId"});

  store.ingest(make_record(100, "A", 100, "SH"));
  auto folded = store.fold_range(sum_slot, 0, 1);
  REQUIRE(folded.size() == 1);
  CHECK(finalize(folded.at(DimensionKey{"A"}), metric_sum("transAmt")) == 100.0);
  CHECK(absorbed_count(folded.at(DimensionKey{"A"})) == 1);
  auto cities = store.fold_range(distinct_slot, 0, 1);
  CHECK(finalize(cities.at(DimensionKey{"A"}), metric_distinct("city")) == 1.0);

  store.ingest(make_record(200, "A", 50, "BJ"));
  folded = store.fold_range(sum_slot, 0, 1);
  CHECK(absorbed_count(folded.at(DimensionKey{"A"})) == 2);
  CHECK(finalize(folded.at(DimensionKey{"A"}), metric_sum("transAmt")) == 150.0);
  CHECK(store.record_count(0) == 2);
  CHECK(store.update_calls() == 4);  // two records, two slots
}

TEST_CASE("re-registering the same metric returns the same slot") {
  SliceStore store({1, kHour, 0});
  const int a = store.register_metric(metric_sum("transAmt"), {"acctId"});
  const int b = store.register_metric(metric_sum("transAmt"), {"acctId"});
  CHECK(a == b);
  const int c = store.register_metric(metric_sum("transAmt"), {"city"});
  CHECK(c != a);
  CHECK(store.slot_count() == 2);
}

TEST_CASE("sealing blocks writes") {
  SliceStore store({1, kHour, 0});
  store.register_metric(metric_count(), {"acctId"});
  store.ingest(make_record(10, "A", 1, "SH"));
  store.seal_slice(0);
  CHECK(store.sealed(0));
  CHECK_THROWS_AS(store.ingest(make_record(20, "A", 1, "SH")), SealedSliceWrite);

  store.ingest(make_record(kHour + 1, "A", 1, "SH"));  // next slice still open
  store.seal_below(5);
  CHECK(store.sealed(1));
  CHECK(store.sealed(4));
  CHECK(!store.sealed(5));
  CHECK_THROWS_AS(store.ingest(make_record(2 * kHour, "A", 1, "SH")), SealedSliceWrite);
}

TEST_CASE("scan reports gaps between populated slices") {
  SliceStore store({2, kHour, 0});
  store.register_metric(metric_count(), {"acctId"});
  store.ingest(make_record(10, "A", 1, "SH"));               // slice 0
  store.ingest(make_record(2 * kHour + 10, "B", 1, "SH"));   // slice 2

  auto slices = store.scan(0, 3);
  REQUIRE(slices.size() == 3);
  CHECK(slices[0].present);
  CHECK(slices[0].record_count == 1);
  CHECK(!slices[1].present);
  CHECK(slices[2].present);

  CHECK(store.scan(5, 9).empty());
  CHECK_THROWS_AS(store.scan(3, 0), InvalidRange);

  SliceStore empty({1, kHour, 0});
  CHECK(empty.scan(0, 100).empty());
}

TEST_CASE("shard count does not change results") {
  const auto records = random_records(2000, 99, 10 * kDay);
  std::vector<SliceStore> stores;
  for (int shards : {1, 3, 8}) {
    SliceStore store({shards, kDay, 0});
    store.register_metric(metric_avg("transAmt"), {"acctId"});
    store.register_metric(metric_distinct("city"), {"acctId"});
    store.register_metric(metric_run("transAmt", RunDirection::Increasing), {"acctId"});
    for (const auto& rec : records) store.ingest(rec);
    stores.push_back(std::move(store));
  }
  for (size_t s = 1; s < stores.size(); ++s) {
    CHECK(stores[s].update_calls() == stores[0].update_calls());
    CHECK(stores[s].total_records() == stores[0].total_records());
    for (int slot = 0; slot < 3; ++slot) {
      auto base = stores[0].fold_range(slot, 0, 11);
      auto other = stores[s].fold_range(slot, 0, 11);
      REQUIRE(base.size() == other.size());
      for (const auto& [key, partial] : base) {
        const MetricKind& kind = stores[0].slot_kind(slot);
        REQUIRE(other.count(key) == 1);
        CHECK(finalize(partial, kind) == finalize(other.at(key), kind));
      }
    }
  }
}

TEST_CASE("broadcast ingestion per shard covers every key exactly once") {
  const auto records = random_records(500, 5, 2 * kDay);
  SliceStore all({4, kDay, 0});
  SliceStore split({4, kDay, 0});
  for (auto* store : {&all, &split}) {
    store->register_metric(metric_sum("transAmt"), {"acctId"});
    store->register_metric(metric_count(), {"city"});
  }
  for (const auto& rec : records) all.ingest(rec);
  for (int shard = 0; shard < 4; ++shard)
    for (const auto& rec : records) split.ingest(rec, shard);

  CHECK(split.update_calls() == all.update_calls());
  CHECK(split.total_records() == all.total_records());
  for (int slot = 0; slot < 2; ++slot) {
    auto a = all.fold_range(slot, 0, 3);
    auto b = split.fold_range(slot, 0, 3);
    REQUIRE(a.size() == b.size());
    for (const auto& [key, partial] : a)
      CHECK(finalize(partial, all.slot_kind(slot)) == finalize(b.at(key), all.slot_kind(slot)));
  }
}

TEST_CASE("fold_key_range matches fold_range per key") {
  const auto records = random_records(800, 31, 4 * kDay);
  SliceStore store({2, kDay, 0});
  const int slot = store.register_metric(metric_variance("transAmt"), {"acctId"});
  for (const auto& rec : records) store.ingest(rec);
  auto folded = store.fold_range(slot, 1, 3);
  for (const auto& [key, partial] : folded) {
    auto single = store.fold_key_range(slot, key, 1, 3);
    REQUIRE(single.has_value());
    CHECK(finalize(*single, store.slot_kind(slot)) ==
          finalize(partial, store.slot_kind(slot)));
  }
  CHECK(!store.fold_key_range(slot, DimensionKey{"nope"}, 0, 5).has_value());
}

TEST_CASE("snapshot restores identical finalized values") {
  const auto records = random_records(1000, 12345, 6 * kDay);
  SliceStore store({3, kDay, 0});
  store.register_metric(metric_sum("transAmt"), {"acctId"});
  store.register_metric(metric_distinct("city"), {"acctId"});
  store.register_metric(metric_central_moment("transAmt", 4), {"acctId", "city"});
  for (const auto& rec : records) store.ingest(rec);
  store.seal_below(2);

  const std::string path = temp_path("roundtrip.snap");
  store.snapshot(path);
  SliceStore back = SliceStore::restore(path);

  CHECK(back.shard_count() == store.shard_count());
  CHECK(back.granularity() == store.granularity());
  CHECK(back.update_calls() == store.update_calls());
  CHECK(back.total_records() == store.total_records());
  CHECK(back.sealed(1));
  CHECK(!back.sealed(2));

  for (int slot = 0; slot < store.slot_count(); ++slot) {
    const MetricKind& kind = store.slot_kind(slot);
    for (int64_t idx = 0; idx < 7; ++idx) {  // per-slice equality, then whole range
      auto a = store.fold_range(slot, idx, idx + 1);
      auto b = back.fold_range(slot, idx, idx + 1);
      REQUIRE(a.size() == b.size());
      for (const auto& [key, partial] : a)
        CHECK(finalize(partial, kind) == finalize(b.at(key), kind));
    }
  }
}

TEST_CASE("snapshot of an empty store restores empty") {
  SliceStore store({2, kHour, 0});
  store.register_metric(metric_count(), {"acctId"});
  const std::string path = temp_path("empty.snap");
  store.snapshot(path);
  SliceStore back = SliceStore::restore(path);
  CHECK(back.total_records() == 0);
  CHECK(back.slot_count() == 1);
  CHECK(!back.extent().has_value());
}

TEST_CASE("corrupt snapshots fail loudly") {
  SliceStore store({1, kDay, 0});
  store.register_metric(metric_sum("transAmt"), {"acctId"});
  for (const auto& rec : random_records(200, 77, 2 * kDay)) store.ingest(rec);
  const std::string path = temp_path("corrupt.snap");
  store.snapshot(path);

  SUBCASE("truncated file") {
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size / 2);
    CHECK_THROWS_AS(SliceStore::restore(path), SnapshotError);
  }
  SUBCASE("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("NOPE!!", 6);
    f.close();
    CHECK_THROWS_AS(SliceStore::restore(path), SnapshotError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(SliceStore::restore(temp_path("nope.snap")), IoError); }
}

TEST_CASE("metrics registered mid-stream join existing key groups safely") {
  SliceStore store({2, kDay, 0});
  const int sum_slot = store.register_metric(metric_sum("transAmt"), {"acctId"});
  store.ingest(make_record(10, "A", 100, "SH"));
  store.ingest(make_record(20, "B", 50, "BJ"));

  // Same group-by tuple, new slot: old keys carry fewer partials until they
  // are touched again.
  const int max_slot = store.register_metric(metric_max("transAmt"), {"acctId"});
  REQUIRE(max_slot != sum_slot);
  store.ingest(make_record(30, "A", 7, "SH"));

  auto sums = store.fold_range(sum_slot, 0, 1);
  CHECK(finalize(sums.at(DimensionKey{"A"}), metric_sum("transAmt")) == 107.0);
  CHECK(finalize(sums.at(DimensionKey{"B"}), metric_sum("transAmt")) == 50.0);

  auto maxes = store.fold_range(max_slot, 0, 1);
  CHECK(finalize(maxes.at(DimensionKey{"A"}), metric_max("transAmt")) == 7.0);
  CHECK(maxes.count(DimensionKey{"B"}) == 0);  // B has no data since registration
  CHECK(!store.fold_key_range(max_slot, DimensionKey{"B"}, 0, 1).has_value());

  // Snapshots must carry the ragged per-key layout faithfully.
  const std::string path = temp_path("midstream.snap");
  store.snapshot(path);
  SliceStore back = SliceStore::restore(path);
  auto restored = back.fold_range(max_slot, 0, 1);
  REQUIRE(restored.size() == 1);
  CHECK(finalize(restored.at(DimensionKey{"A"}), metric_max("transAmt")) == 7.0);
}

TEST_CASE("conservation: every record lands in exactly one slice") {
  const auto records = random_records(3000, 2024, 9 * kDay);
  SliceStore store({4, kDay, 0});
  store.register_metric(metric_count(), {"acctId"});
  for (const auto& rec : records) store.ingest(rec);
  CHECK(store.total_records() == records.size());
  uint64_t across = 0;
  for (const auto& slice : store.scan(0, 10))
    if (slice.present) across += slice.record_count;
  CHECK(across == records.size());
}
