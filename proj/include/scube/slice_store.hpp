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

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "scube/aggregate.hpp"
#include "scube/metric.hpp"
#include "scube/record.hpp"
#include "scube/time.hpp"

namespace scube {

/// Group-by field values joined with '|'. Field values must not contain '|';
/// the generator's identifiers never do.
struct DimensionKey {
  std::string value;

  bool operator==(const DimensionKey&) const = default;
  auto operator<=>(const DimensionKey&) const = default;
};

uint64_t fnv1a(std::string_view s);

struct DimensionKeyHash {
  using is_transparent = void;
  size_t operator()(const DimensionKey& k) const { return static_cast<size_t>(fnv1a(k.value)); }
  size_t operator()(std::string_view s) const { return static_cast<size_t>(fnv1a(s)); }
};

struct DimensionKeyEq {
  using is_transparent = void;
  bool operator()(const DimensionKey& a, const DimensionKey& b) const { return a.value == b.value; }
  bool operator()(const DimensionKey& a, std::string_view b) const { return a.value == b; }
  bool operator()(std::string_view a, const DimensionKey& b) const { return a == b.value; }
};

/// One window/step/offset triple contributing to the slice width.
struct GranularityTerm {
  Duration window = 0;
  Duration step = 0;
  Duration offset = 0;  // window-start offset from the origin, for fixed ranges
};

/// GCD of all windows, steps and offsets. Throws InvalidSpec on an empty
/// list or non-positive durations.
Duration compute_granularity(std::span<const GranularityTerm> terms);

/// Index of the slice containing t: floor((t - origin) / granularity).
/// Boundary timestamps belong to the later slice. Throws OutOfRange when
/// t < origin, InvalidSpec when granularity <= 0.
int64_t slice_index_for(Timestamp t, Duration granularity, Timestamp origin);

/// Time-sliced, key-sharded storage of partial aggregates.
///
/// Each registered metric occupies one slot; metrics sharing a group-by
/// tuple share one key table per slice, so a record updates each slot
/// exactly once no matter how many queries reference it. Keys are assigned
/// to shards by a stable hash; every key's partials live entirely in one
/// shard, so concurrent ingestion is safe as long as each shard is written
/// by one thread (pass `only_shard` to restrict a pass to one shard).
class SliceStore {
 public:
  struct Config {
    int shards = 1;
    Duration granularity = kDay;
    Timestamp origin = 0;
  };

  explicit SliceStore(const Config& cfg);

  SliceStore(SliceStore&& other) noexcept;
  SliceStore& operator=(SliceStore&& other) noexcept;

  // -- registration ---------------------------------------------------------

  /// Registers a metric under a group-by tuple, returning its slot id.
  /// Re-registering an identical (kind, group_by) pair returns the existing
  /// slot: this is what lets overlapping queries share one computation.
  int register_metric(const MetricKind& kind, const std::vector<std::string>& group_by);

  int slot_count() const { return static_cast<int>(slots_.size()); }
  const MetricKind& slot_kind(int slot) const { return slots_[static_cast<size_t>(slot)].kind; }
  const std::vector<std::string>& slot_group_by(int slot) const;

  // -- ingestion ------------------------------------------------------------

  static constexpr int kAllShards = -1;

  /// Routes one record into its slice, updating every registered slot under
  /// the record's dimension keys. With `only_shard` set, only keys hashing
  /// to that shard are touched (broadcast-parallel ingestion).
  /// Throws SealedSliceWrite when the target slice is sealed, OutOfRange
  /// when the record predates the origin.
  void ingest(const TransactionRecord& rec, int only_shard = kAllShards);

  // -- sealing --------------------------------------------------------------

  /// Marks every slice with index < bound immutable.
  void seal_below(int64_t bound);
  /// Marks one slice immutable.
  void seal_slice(int64_t index);
  bool sealed(int64_t index) const;

  // -- scanning -------------------------------------------------------------

  struct ScanSlice {
    int64_t index = 0;
    bool present = false;  // false marks a gap
    bool sealed = false;
    uint64_t record_count = 0;
  };

  /// Slices of [from, to) in index order; absent indices appear as gaps.
  /// Throws InvalidRange on an inverted range.
  std::vector<ScanSlice> scan(int64_t from, int64_t to) const;

  /// Smallest and largest populated slice index, if any.
  std::optional<std::pair<int64_t, int64_t>> extent() const;

  // -- evaluation access ----------------------------------------------------

  using KeyedPartials = std::unordered_map<DimensionKey, PartialAggregate, DimensionKeyHash>;

  /// Folds slot partials over slices [from, to) per key, in slice order.
  /// Keys absent from the whole range are absent from the result.
  KeyedPartials fold_range(int slot, int64_t from, int64_t to) const;

  /// Same fold restricted to one key.
  std::optional<PartialAggregate> fold_key_range(int slot, const DimensionKey& key, int64_t from,
                                                 int64_t to) const;

  struct SeriesPoint {
    int64_t index;
    const PartialAggregate* partial;  // points into the store; valid until mutation
  };

  /// Per-key series of slice partials over [from, to), slice index ascending
  /// within each key, keys sorted. Input for sliding-window sweeps.
  std::vector<std::pair<DimensionKey, std::vector<SeriesPoint>>> collect_series(int slot,
                                                                                int64_t from,
                                                                                int64_t to) const;

  // -- persistence ----------------------------------------------------------

  /// Binary snapshot, "SCUBE1" header. Restoring yields a store with
  /// identical finalized values for every (slice, key, slot).
  void snapshot(const std::string& path) const;
  static SliceStore restore(const std::string& path);

  // -- bookkeeping ----------------------------------------------------------

  int shard_count() const { return static_cast<int>(shards_.size()); }
  int shard_of(const DimensionKey& key) const {
    return static_cast<int>(fnv1a(key.value) % shards_.size());
  }
  Duration granularity() const { return granularity_; }
  Timestamp origin() const { return origin_; }

  /// Total partial_update invocations across shards (the sharing counter).
  uint64_t update_calls() const;
  /// Total slice-partial reads performed by folds.
  uint64_t partial_reads() const { return partial_reads_.load(std::memory_order_relaxed); }
  /// Sum of per-slice record counts.
  uint64_t total_records() const;
  uint64_t record_count(int64_t index) const;
  size_t approx_bytes() const;

  /// Builds the dimension key a record produces for a slot's group-by tuple.
  DimensionKey key_for(const TransactionRecord& rec, int slot) const;

 private:
  struct SlotDef {
    MetricKind kind;
    int group = 0;
    int pos = 0;  // position inside the group's partial vector
  };

  struct KeyGroup {
    std::vector<std::string> fields;
    std::vector<int> slots;
  };

  using Table = std::unordered_map<DimensionKey, std::vector<PartialAggregate>, DimensionKeyHash,
                                   DimensionKeyEq>;

  struct ShardSlice {
    uint64_t record_count = 0;
    std::vector<Table> tables;  // one per key group
  };

  struct Shard {
    std::map<int64_t, ShardSlice> slices;
    uint64_t update_calls = 0;
    // ingestion is time-ordered, so the last slice is almost always hit again
    int64_t memo_index = INT64_MIN;
    ShardSlice* memo_slice = nullptr;
  };

  void build_key(const TransactionRecord& rec, const KeyGroup& group, std::string& out) const;
  MeasureValue extract_measure(const TransactionRecord& rec, const MetricKind& kind,
                               std::string& scratch) const;

  Duration granularity_;
  Timestamp origin_;
  std::vector<Shard> shards_;
  std::vector<SlotDef> slots_;
  std::vector<KeyGroup> groups_;
  int64_t sealed_below_ = INT64_MIN;
  std::unordered_set<int64_t> force_sealed_;
  mutable std::atomic<uint64_t> partial_reads_{0};
};

}  // namespace scube
