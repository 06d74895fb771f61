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

#include "scube/metric.hpp"

#include "scube/errors.hpp"
#include "scube/record.hpp"

namespace scube {

namespace {

void require_numeric_field(const std::string& name, const char* role) {
  if (name.empty()) throw InvalidSpec(std::string(role) + " field is required");
  if (schema_field_type(name) != FieldType::Integer)
    throw InvalidSpec(std::string(role) + " field '" + name + "' is not numeric");
}

}  // namespace

void MetricKind::validate(int max_moment_order) const {
  switch (family) {
    case MetricFamily::Count:
      if (!measure_field.empty() && !schema_has_field(measure_field))
        throw InvalidSpec("unknown field '" + measure_field + "'");
      return;
    case MetricFamily::Sum:
    case MetricFamily::Avg:
    case MetricFamily::Min:
    case MetricFamily::Max:
    case MetricFamily::Variance:
    case MetricFamily::StdDev:
    case MetricFamily::MonotonicRun:
      require_numeric_field(measure_field, "measure");
      return;
    case MetricFamily::CentralMoment:
      require_numeric_field(measure_field, "measure");
      if (moment_order < 2 || moment_order > max_moment_order)
        throw InvalidSpec("central moment order " + std::to_string(moment_order) +
                          " outside 2.." + std::to_string(max_moment_order));
      return;
    case MetricFamily::Covariance:
      require_numeric_field(measure_field, "first covariance");
      require_numeric_field(second_field, "second covariance");
      if (measure_field == second_field)
        throw InvalidSpec("covariance needs two distinct fields");
      return;
    case MetricFamily::DistinctCount:
      if (measure_field.empty() || !schema_has_field(measure_field))
        throw InvalidSpec("unknown field '" + measure_field + "'");
      return;
  }
  throw InvalidSpec("unknown metric family");
}

int MetricKind::required_order() const {
  switch (family) {
    case MetricFamily::Variance:
    case MetricFamily::StdDev:
      return 2;
    case MetricFamily::CentralMoment:
      return moment_order;
    default:
      return 0;
  }
}

bool MetricKind::integer_valued() const {
  switch (family) {
    case MetricFamily::Count:
    case MetricFamily::Sum:
    case MetricFamily::Min:
    case MetricFamily::Max:
    case MetricFamily::DistinctCount:
    case MetricFamily::MonotonicRun:
      return true;
    default:
      return false;
  }
}

std::string_view family_name(MetricFamily f) {
  switch (f) {
    case MetricFamily::Count: return "count";
    case MetricFamily::Sum: return "sum";
    case MetricFamily::Avg: return "avg";
    case MetricFamily::Min: return "min";
    case MetricFamily::Max: return "max";
    case MetricFamily::Variance: return "variance";
    case MetricFamily::StdDev: return "stddev";
    case MetricFamily::CentralMoment: return "moment";
    case MetricFamily::Covariance: return "cov";
    case MetricFamily::DistinctCount: return "distinct";
    case MetricFamily::MonotonicRun: return "run";
  }
  return "?";
}

MetricKind metric_count() { return MetricKind{MetricFamily::Count, "", 0, "", RunDirection::Increasing}; }

MetricKind metric_sum(std::string field) {
  return MetricKind{MetricFamily::Sum, std::move(field), 0, "", RunDirection::Increasing};
}

MetricKind metric_avg(std::string field) {
  return MetricKind{MetricFamily::Avg, std::move(field), 0, "", RunDirection::Increasing};
}

MetricKind metric_min(std::string field) {
  return MetricKind{MetricFamily::Min, std::move(field), 0, "", RunDirection::Increasing};
}

MetricKind metric_max(std::string field) {
  return MetricKind{MetricFamily::Max, std::move(field), 0, "", RunDirection::Increasing};
}

MetricKind metric_variance(std::string field) {
  return MetricKind{MetricFamily::Variance, std::move(field), 0, "", RunDirection::Increasing};
}

MetricKind metric_stddev(std::string field) {
  return MetricKind{MetricFamily::StdDev, std::move(field), 0, "", RunDirection::Increasing};
}

MetricKind metric_central_moment(std::string field, int order) {
  return MetricKind{MetricFamily::CentralMoment, std::move(field), order, "", RunDirection::Increasing};
}

MetricKind metric_covariance(std::string field_x, std::string field_y) {
  return MetricKind{MetricFamily::Covariance, std::move(field_x), 0, std::move(field_y),
                    RunDirection::Increasing};
}

MetricKind metric_distinct(std::string field) {
  return MetricKind{MetricFamily::DistinctCount, std::move(field), 0, "", RunDirection::Increasing};
}

MetricKind metric_run(std::string field, RunDirection dir) {
  return MetricKind{MetricFamily::MonotonicRun, std::move(field), 0, "", dir};
}

}  // namespace scube
