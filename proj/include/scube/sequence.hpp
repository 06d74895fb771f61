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

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "scube/record.hpp"
#include "scube/slice_store.hpp"
#include "scube/time.hpp"

namespace scube {

enum class CmpOp : uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

/// One field comparison; a step is the conjunction of its predicates.
/// Ordered comparisons are only valid on numeric fields.
struct EventPredicate {
  std::string field;
  CmpOp op = CmpOp::Eq;
  bool numeric = false;
  int64_t num_value = 0;
  std::string text_value;

  bool matches(const TransactionRecord& rec) const;
};

using PatternStep = std::vector<EventPredicate>;

/// Ordered event pattern, detected per dimension key under
/// skip-till-next-match semantics: non-matching events are transparent and
/// every step consumes the earliest eligible event.
struct SequencePattern {
  std::string id;
  std::vector<PatternStep> steps;
  Duration within = 0;
  std::vector<std::string> group_by;
};

struct CompletedMatch {
  std::string pattern_id;
  DimensionKey key;
  Timestamp first_time = 0;
  Timestamp last_time = 0;
  std::vector<uint64_t> event_ids;  // ordinals of the matched records, in order
};

/// Compiled pattern plus the in-flight partial matches per key.
///
/// A new partial match opens on every record satisfying step 0; each live
/// partial advances at most one step per record; partial matches whose first
/// event has fallen out of the `within` horizon are pruned.
class SequenceMatcher {
 public:
  /// Validates and compiles. Throws PatternError on empty/short step lists,
  /// unknown fields, non-positive `within`, or ordered comparisons on text.
  static SequenceMatcher compile(SequencePattern pattern);

  /// Dimension key the pattern's group-by produces for this record.
  DimensionKey key_of(const TransactionRecord& rec) const;

  /// Feeds one record (nondecreasing event time per key) and returns any
  /// matches it completes.
  std::vector<CompletedMatch> feed(const TransactionRecord& rec, uint64_t event_id);

  /// Drops partial matches that can no longer complete given the watermark.
  /// Returns how many were pruned.
  uint64_t expire(Timestamp watermark);

  uint64_t live_partials(const DimensionKey& key) const;
  uint64_t live_partials_total() const;
  const SequencePattern& pattern() const { return pattern_; }

 private:
  explicit SequenceMatcher(SequencePattern p) : pattern_(std::move(p)) {}

  struct PartialMatch {
    size_t next_step = 0;
    Timestamp first_time = 0;
    std::vector<uint64_t> event_ids;
  };

  bool step_matches(size_t step, const TransactionRecord& rec) const;

  SequencePattern pattern_;
  std::unordered_map<DimensionKey, std::vector<PartialMatch>, DimensionKeyHash> state_;
};

}  // namespace scube
