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
#include <string_view>

namespace scube {

enum class MetricFamily : uint8_t {
  Count,
  Sum,
  Avg,
  Min,
  Max,
  Variance,
  StdDev,
  CentralMoment,
  Covariance,
  DistinctCount,
  MonotonicRun,
};

enum class RunDirection : uint8_t { Increasing, Decreasing };

/// Highest supported central-moment order.
constexpr int kMaxMomentOrder = 8;

/// What to compute over which record field(s). All statistics are population
/// statistics: moments and covariance are normalized by n, not n-1.
struct MetricKind {
  MetricFamily family = MetricFamily::Count;
  std::string measure_field;  // empty for Count
  int moment_order = 0;       // CentralMoment only, 2..kMaxMomentOrder
  std::string second_field;   // Covariance only
  RunDirection direction = RunDirection::Increasing;  // MonotonicRun only

  bool operator==(const MetricKind&) const = default;

  /// Checks field names against the record schema, the moment-order cap and
  /// the two-distinct-fields rule for covariance. Throws InvalidSpec.
  void validate(int max_moment_order = kMaxMomentOrder) const;

  /// Order of the moment sums this kind needs (0 for non-moment families).
  int required_order() const;

  /// True when finalize always yields a whole number (count, integer sums,
  /// min/max of integer fields, distinct cardinality, run length).
  bool integer_valued() const;
};

std::string_view family_name(MetricFamily f);

// Convenience constructors for the common kinds.
MetricKind metric_count();
MetricKind metric_sum(std::string field);
MetricKind metric_avg(std::string field);
MetricKind metric_min(std::string field);
MetricKind metric_max(std::string field);
MetricKind metric_variance(std::string field);
MetricKind metric_stddev(std::string field);
MetricKind metric_central_moment(std::string field, int order);
MetricKind metric_covariance(std::string field_x, std::string field_y);
MetricKind metric_distinct(std::string field);
MetricKind metric_run(std::string field, RunDirection dir);

}  // namespace scube
