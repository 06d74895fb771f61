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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <variant>

#include "scube/errors.hpp"
#include "scube/metric.hpp"

namespace scube {

// The per-record value absorbed into a partial aggregate. monostate feeds
// Count, which aggregates presence rather than a field; the pair feeds
// covariance; string_view feeds distinct counting.
using MeasureValue =
    std::variant<std::monostate, int64_t, double, std::pair<double, double>, std::string_view>;

// Shared state for Count/Sum/Avg. Sums stay exact integers; division happens
// only in finalize.
struct CountSumState {
  uint64_t n = 0;
  int64_t sum = 0;
};

// Power sums of (x - shift) up to `order`, anchored at the first observed
// value. Central moments are shift-invariant, and anchoring keeps the
// binomial expansion in finalize well conditioned when the data sits far
// from zero. Merging re-expands the right operand's sums about the left
// operand's anchor, so merge stays a componentwise polynomial identity.
struct MomentState {
  uint64_t n = 0;
  uint8_t order = 2;
  double shift = 0.0;
  std::array<double, kMaxMomentOrder> pow{};  // pow[j-1] = sum of (x-shift)^j
};

struct MinMaxState {
  uint64_t n = 0;  // n == 0 means no value present
  double min_value = 0.0;
  double max_value = 0.0;
};

// Sums of coordinates shifted by the first observed pair; covariance is
// shift-invariant, same trick as MomentState.
struct CovarianceState {
  uint64_t n = 0;
  double shift_x = 0.0, shift_y = 0.0;
  double sum_x = 0.0, sum_y = 0.0, sum_xy = 0.0;
};

struct DistinctState {
  uint64_t n = 0;  // records absorbed, not set size
  std::unordered_set<std::string> values;
};

// Longest strictly monotonic streak bookkeeping. prefix/suffix describe the
// runs touching the chunk boundaries so merge can join streaks across
// adjacent chunks; merge order must follow event time.
struct RunState {
  uint64_t n = 0;
  RunDirection direction = RunDirection::Increasing;
  double first = 0.0, last = 0.0;
  uint64_t longest = 0, prefix = 0, suffix = 0;
};

using PartialAggregate =
    std::variant<CountSumState, MomentState, MinMaxState, CovarianceState, DistinctState, RunState>;

/// Neutral element for the kind: merging it with any partial is a no-op.
PartialAggregate partial_identity(const MetricKind& kind);

/// Absorbs one record value in place; n grows by exactly 1.
/// Throws InvalidMeasure when the value type does not fit the variant.
void absorb(PartialAggregate& p, const MeasureValue& value);

/// Value-returning form of absorb.
PartialAggregate partial_update(PartialAggregate p, const MeasureValue& value);

/// Merges b into a. The result aggregates the concatenation of both
/// multisets; for RunState, a must precede b in event time.
/// Throws IncompatiblePartials on variant/order/direction mismatch.
void merge_into(PartialAggregate& a, const PartialAggregate& b);

/// Value-returning form of merge_into.
PartialAggregate partial_merge(PartialAggregate a, const PartialAggregate& b);

/// Finalizes the statistic named by `kind` over the absorbed multiset.
/// Population conventions: variance = m2, m_k = (1/n)*sum((x-mean)^k),
/// covariance = E[xy] - E[x]E[y]. Throws EmptyWindow when the kind needs at
/// least one record and the partial is empty, IncompatiblePartials when the
/// kind does not match the variant.
double finalize(const PartialAggregate& p, const MetricKind& kind);

/// Number of records absorbed so far.
uint64_t absorbed_count(const PartialAggregate& p);

/// Rough heap footprint, used for memory reporting.
size_t approx_partial_bytes(const PartialAggregate& p);

}  // namespace scube
