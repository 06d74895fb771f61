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

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scube/metric.hpp"
#include "scube/record.hpp"
#include "scube/sequence.hpp"
#include "scube/slice_store.hpp"
#include "scube/time.hpp"

namespace scube {

enum class TriggerKind : uint8_t { DataDriven, ClockDriven };

struct Trigger {
  TriggerKind kind = TriggerKind::DataDriven;
  Duration interval = 0;  // ClockDriven emission cadence
};

/// A registered windowed metric query. Windows are half-open [start, end),
/// end-aligned on the step grid anchored at the engine origin.
struct QuerySpec {
  std::string id;
  MetricKind metric;
  std::vector<std::string> group_by;
  Duration window_size = 0;
  Duration window_step = 0;
  Trigger trigger;
  std::optional<std::pair<Timestamp, Timestamp>> time_range;  // fixed-interval query
};

struct WindowResult {
  std::string query_id;
  Timestamp window_start = 0;
  Timestamp window_end = 0;  // half-open
  std::vector<std::pair<DimensionKey, double>> values;  // sorted by key
  Timestamp emitted_at = 0;
  bool revised = false;  // re-issued after an in-lateness late record
};

struct EngineConfig {
  int shards = 0;  // 0 picks the hardware concurrency
  Duration allowed_lateness = 0;
  Timestamp origin = 0;
  std::optional<Duration> granularity;  // fixed up front instead of derived
};

struct EngineCounters {
  uint64_t ingested = 0;
  uint64_t dropped_late = 0;
  uint64_t update_calls = 0;
  uint64_t partial_reads = 0;
  uint64_t sequence_matches = 0;
};

/// The engine: registers queries, slices and shards incoming records,
/// maintains the event-time watermark, and answers windows by merging slice
/// partials (never by touching raw records).
///
/// Single-record ingest is single-threaded and drives data-driven emission
/// and sequence detection. ingest_batch() spreads the same work across shard
/// threads; it is a bulk-load path, so data-driven emission is skipped.
class CubeEngine {
 public:
  explicit CubeEngine(EngineConfig cfg = {});
  ~CubeEngine();

  CubeEngine(CubeEngine&&) noexcept;
  CubeEngine& operator=(CubeEngine&&) noexcept;

  // -- registration ---------------------------------------------------------

  /// Validates and indexes the query. Before the first ingest any compatible
  /// set of specs is fine (the slice width is derived from all of them);
  /// afterwards the spec's step/window must divide into the fixed
  /// granularity. Throws DuplicateQuery, GranularityMismatch, InvalidSpec.
  const std::string& register_query(QuerySpec spec);

  void register_sequence(SequencePattern pattern);

  /// Sink invoked on every triggered window emission (data-driven, clock
  /// boundaries, finish), in addition to the returned lists.
  void on_result(std::function<void(const WindowResult&)> sink);

  /// Sink for completed sequence matches.
  void on_match(std::function<void(const CompletedMatch&)> sink);

  // -- ingestion ------------------------------------------------------------

  /// Ingests one record in event-time order. Returns the data-driven
  /// emissions it caused. Records older than watermark - allowed_lateness
  /// are counted as dropped and change nothing.
  std::vector<WindowResult> ingest(const TransactionRecord& rec);

  /// Parallel bulk ingestion of a time-ordered batch across shards.
  void ingest_batch(std::span<const TransactionRecord> records);

  /// Advances the processing clock; emits every ClockDriven query whose
  /// emission boundary was crossed. Throws ClockError on regression.
  std::vector<WindowResult> advance_clock(Timestamp now);

  /// End-of-stream flush: seals everything and emits the remaining complete
  /// windows of ClockDriven queries plus all fixed-range queries.
  std::vector<WindowResult> finish();

  // -- evaluation -----------------------------------------------------------

  /// Answers one full window ending at `window_end` by folding the covered
  /// slices per key. Throws UnknownQuery, AlignmentError.
  WindowResult evaluate_window(const std::string& query_id, Timestamp window_end) const;

  /// Like evaluate_window for an arbitrary granularity-aligned interval.
  WindowResult evaluate_range(const std::string& query_id, Timestamp start, Timestamp end) const;

  struct WindowBounds {
    Timestamp start = 0;
    Timestamp end = 0;
  };

  /// Evaluates many window positions of one query in a single pass over the
  /// slices, amortizing merges across overlapping windows (two-stacks
  /// sliding aggregation). Bounds must be aligned and ascending. Results
  /// match evaluate_window / evaluate_range exactly.
  std::vector<WindowResult> evaluate_windows(const std::string& query_id,
                                             std::span<const WindowBounds> bounds) const;

  /// All step-aligned windows of the query over the ingested extent,
  /// starts clipped to the data. Convenience wrapper over evaluate_windows.
  std::vector<WindowResult> evaluate_all_windows(const std::string& query_id) const;

  /// Finalized value of one key over the full window ending at window_end.
  /// Returns nothing when the key is absent. The cheap read path.
  std::optional<double> point_lookup(const std::string& query_id, const DimensionKey& key,
                                     Timestamp window_end) const;

  // -- introspection --------------------------------------------------------

  EngineCounters counters() const;
  Timestamp watermark() const { return watermark_; }
  Duration granularity() const;
  bool frozen() const { return store_ != nullptr; }
  const SliceStore& store() const;
  const QuerySpec& query(const std::string& id) const;
  std::vector<std::string> query_ids() const;

  /// Window positions evaluate_all_windows would use for this query.
  std::vector<WindowBounds> planned_windows(const std::string& query_id) const;

 private:
  struct Query {
    QuerySpec spec;
    int slot = -1;
    Timestamp last_clock_emitted_end = INT64_MIN;  // ClockDriven bookkeeping
  };

  struct MatcherSet {
    SequencePattern pattern;
    std::vector<SequenceMatcher> per_shard;
  };

  void freeze();
  void require_frozen() const;
  const Query& find_query(const std::string& id) const;
  Query& find_query(const std::string& id);
  Timestamp align_check(Timestamp t, const char* what) const;
  void seal_by_watermark();
  WindowResult fold_window(const Query& q, Timestamp start, Timestamp end) const;
  void feed_sequences(const TransactionRecord& rec, uint64_t event_id, int only_shard,
                      std::vector<CompletedMatch>* collect);
  std::vector<WindowResult> emit_clock_boundary(Timestamp boundary);
  void deliver(const std::vector<WindowResult>& results) const;

  EngineConfig cfg_;
  std::unique_ptr<SliceStore> store_;
  std::vector<Query> queries_;
  std::vector<MatcherSet> matchers_;
  std::function<void(const WindowResult&)> result_sink_;
  std::function<void(const CompletedMatch&)> match_sink_;
  Timestamp watermark_ = INT64_MIN;
  Timestamp clock_now_ = INT64_MIN;
  uint64_t ingested_ = 0;
  uint64_t dropped_late_ = 0;
  uint64_t sequence_matches_ = 0;
  bool finished_ = false;
};

}  // namespace scube
