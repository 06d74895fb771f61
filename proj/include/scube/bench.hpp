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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scube/engine.hpp"
#include "scube/metric.hpp"
#include "scube/record.hpp"
#include "scube/time.hpp"

namespace scube {

struct BenchQuery {
  std::string id;
  MetricKind metric;
  std::vector<std::string> group_by;
};

enum class BenchMode : uint8_t { Engine, Baseline, Both };

/// One engine-vs-naive-baseline comparison: the same queries over the same
/// dataset at several window sizes, fixed step. The baseline recomputes each
/// window from raw records with no partial reuse, so it doubles as the
/// correctness oracle; the engine ingests once per row and answers windows
/// by slice merging.
struct BenchPlan {
  std::vector<BenchQuery> queries;
  std::vector<Duration> window_sizes{kDay, 90 * kDay};
  Duration step = kDay;
  BenchMode mode = BenchMode::Both;
  int repetitions = 1;
  int shards = 0;  // 0 = hardware concurrency
  uint64_t baseline_memory_cap = 2ull << 30;
  Timestamp origin = 0;

  static BenchPlan defaults();  // avg(transAmt) and distinct(city), both by acctId
  void validate() const;       // throws InvalidSpec
};

struct BenchRow {
  std::string query;
  Duration window_size = 0;
  std::string mode;  // "engine" or "baseline"
  double seconds = 0;         // engine: ingest + evaluate; NaN when exhausted
  double ingest_seconds = 0;  // baseline has no ingest phase
  double eval_seconds = 0;
  uint64_t windows = 0;
  int equal = -1;  // 1/0 verdict vs the counterpart mode, -1 not applicable
  std::string flag;  // "exhausted", or first-mismatch detail
  uint64_t approx_mem_bytes = 0;
  int shards = 1;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  bool all_equal = true;  // over rows with a verdict
};

/// Records must be sorted by transTime.
BenchReport run_bench(const BenchPlan& plan, std::span<const TransactionRecord> records);

/// Writes the report CSV (query,windowSize,mode,seconds,windows,equal plus
/// diagnostic columns). Returns all_equal so callers can map it to an exit
/// status. Throws IoError on write failure.
bool compare_and_emit(const BenchReport& report, const std::string& path);

/// The window positions both modes evaluate: step-aligned ends over the data
/// span, starts clipped to the data.
std::vector<CubeEngine::WindowBounds> plan_window_bounds(
    std::span<const TransactionRecord> records, Timestamp origin, Duration step, Duration window);

struct ThroughputRow {
  int shards = 1;
  uint64_t records = 0;
  double write_tps = 0;  // batch ingest with 16 registered metrics
  double read_tps = 0;   // point lookups of one registered metric
};

/// Ingest/lookup throughput at each shard count.
std::vector<ThroughputRow> run_throughput(std::span<const TransactionRecord> records,
                                          std::span<const int> shard_counts,
                                          uint64_t lookups = 200000);

}  // namespace scube
