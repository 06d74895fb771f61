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

#include "scube/aggregate.hpp"

#include <algorithm>
#include <cmath>

namespace scube {

namespace {

// Pascal's triangle up to kMaxMomentOrder.
constexpr auto kBinomial = [] {
  std::array<std::array<double, kMaxMomentOrder + 1>, kMaxMomentOrder + 1> c{};
  for (int j = 0; j <= kMaxMomentOrder; ++j) {
    c[j][0] = 1.0;
    for (int i = 1; i <= j; ++i)
      c[j][i] = c[j - 1][i - 1] + (i <= j - 1 ? c[j - 1][i] : 0.0);
  }
  return c;
}();

[[noreturn]] void throw_measure_mismatch(const char* want) {
  throw InvalidMeasure(std::string("measure value does not fit partial, expected ") + want);
}

double numeric_measure(const MeasureValue& value, const char* want) {
  if (const auto* i = std::get_if<int64_t>(&value)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&value)) return *d;
  throw_measure_mismatch(want);
}

void moment_absorb(MomentState& m, double x) {
  if (m.n == 0) m.shift = x;
  const double y = x - m.shift;
  double acc = 1.0;
  for (int j = 0; j < m.order; ++j) {
    acc *= y;
    m.pow[static_cast<size_t>(j)] += acc;
  }
  ++m.n;
}

void moment_merge(MomentState& a, const MomentState& b) {
  if (a.order != b.order)
    throw IncompatiblePartials("moment partials of different order");
  if (b.n == 0) return;
  if (a.n == 0) {
    a = b;
    return;
  }
  // Re-expand b's sums about a's anchor: sum((x-sa)^j) over b's records is
  // sum over i of C(j,i) * d^(j-i) * b.pow[i] with d = sb - sa and pow[0] = n.
  const double d = b.shift - a.shift;
  std::array<double, kMaxMomentOrder + 1> d_pow{};
  d_pow[0] = 1.0;
  for (int j = 1; j <= a.order; ++j) d_pow[static_cast<size_t>(j)] = d_pow[static_cast<size_t>(j - 1)] * d;
  for (int j = a.order; j >= 1; --j) {
    double s = d_pow[static_cast<size_t>(j)] * static_cast<double>(b.n);
    for (int i = 1; i <= j; ++i)
      s += kBinomial[static_cast<size_t>(j)][static_cast<size_t>(i)] *
           d_pow[static_cast<size_t>(j - i)] * b.pow[static_cast<size_t>(i - 1)];
    a.pow[static_cast<size_t>(j - 1)] += s;
  }
  a.n += b.n;
}

double central_moment(const MomentState& m, int k) {
  if (k > m.order) throw IncompatiblePartials("partial carries too few moment sums");
  const double n = static_cast<double>(m.n);
  const double mu = m.pow[0] / n;  // mean of the shifted values
  double neg_mu_pow = 1.0;         // (-mu)^(k-j), built from j = k downwards
  double acc = 0.0;
  for (int j = k; j >= 0; --j) {
    const double p_j = (j == 0) ? n : m.pow[static_cast<size_t>(j - 1)];
    acc += kBinomial[static_cast<size_t>(k)][static_cast<size_t>(j)] * neg_mu_pow * p_j;
    neg_mu_pow *= -mu;
  }
  return acc / n;
}

void run_merge(RunState& a, const RunState& b) {
  if (a.direction != b.direction)
    throw IncompatiblePartials("run partials of opposite direction");
  if (b.n == 0) return;
  if (a.n == 0) {
    a = b;
    return;
  }
  const bool joins = a.direction == RunDirection::Increasing ? (b.first > a.last)
                                                             : (b.first < a.last);
  const uint64_t candidate = joins ? a.suffix + b.prefix : 0;
  RunState out;
  out.direction = a.direction;
  out.n = a.n + b.n;
  out.first = a.first;
  out.last = b.last;
  out.longest = std::max({a.longest, b.longest, candidate});
  out.prefix = (joins && a.prefix == a.n) ? a.n + b.prefix : a.prefix;
  out.suffix = (joins && b.suffix == b.n) ? b.n + a.suffix : b.suffix;
  a = out;
}

[[noreturn]] void throw_kind_mismatch(MetricFamily family) {
  throw IncompatiblePartials(std::string("partial variant does not match metric kind '") +
                             std::string(family_name(family)) + "'");
}

void require_nonempty(const char* what, uint64_t n) {
  if (n == 0) throw EmptyWindow(std::string(what) + " of an empty window");
}

}  // namespace

PartialAggregate partial_identity(const MetricKind& kind) {
  switch (kind.family) {
    case MetricFamily::Count:
    case MetricFamily::Sum:
    case MetricFamily::Avg:
      return CountSumState{};
    case MetricFamily::Variance:
    case MetricFamily::StdDev:
    case MetricFamily::CentralMoment: {
      MomentState m;
      m.order = static_cast<uint8_t>(kind.required_order());
      return m;
    }
    case MetricFamily::Min:
    case MetricFamily::Max:
      return MinMaxState{};
    case MetricFamily::Covariance:
      return CovarianceState{};
    case MetricFamily::DistinctCount:
      return DistinctState{};
    case MetricFamily::MonotonicRun: {
      RunState r;
      r.direction = kind.direction;
      return r;
    }
  }
  throw InvalidSpec("unknown metric family");
}

void absorb(PartialAggregate& p, const MeasureValue& value) {
  std::visit(
      [&](auto& state) {
        using S = std::decay_t<decltype(state)>;
        if constexpr (std::is_same_v<S, CountSumState>) {
          if (const auto* i = std::get_if<int64_t>(&value)) state.sum += *i;
          else if (!std::holds_alternative<std::monostate>(value)) throw_measure_mismatch("integer or none");
          ++state.n;
        } else if constexpr (std::is_same_v<S, MomentState>) {
          moment_absorb(state, numeric_measure(value, "numeric"));
        } else if constexpr (std::is_same_v<S, MinMaxState>) {
          const double v = numeric_measure(value, "numeric");
          if (state.n == 0) {
            state.min_value = state.max_value = v;
          } else {
            state.min_value = std::min(state.min_value, v);
            state.max_value = std::max(state.max_value, v);
          }
          ++state.n;
        } else if constexpr (std::is_same_v<S, CovarianceState>) {
          const auto* xy = std::get_if<std::pair<double, double>>(&value);
          if (xy == nullptr) throw_measure_mismatch("value pair");
          if (state.n == 0) {
            state.shift_x = xy->first;
            state.shift_y = xy->second;
          }
          const double x = xy->first - state.shift_x;
          const double y = xy->second - state.shift_y;
          state.sum_x += x;
          state.sum_y += y;
          state.sum_xy += x * y;
          ++state.n;
        } else if constexpr (std::is_same_v<S, DistinctState>) {
          const auto* sv = std::get_if<std::string_view>(&value);
          if (sv == nullptr) throw_measure_mismatch("dimension value");
          state.values.emplace(*sv);
          ++state.n;
        } else if constexpr (std::is_same_v<S, RunState>) {
          const double v = numeric_measure(value, "numeric");
          RunState single;
          single.direction = state.direction;
          single.n = 1;
          single.first = single.last = v;
          single.longest = single.prefix = single.suffix = 1;
          run_merge(state, single);
        }
      },
      p);
}

PartialAggregate partial_update(PartialAggregate p, const MeasureValue& value) {
  absorb(p, value);
  return p;
}

void merge_into(PartialAggregate& a, const PartialAggregate& b) {
  if (a.index() != b.index())
    throw IncompatiblePartials("cannot merge partials of different variants");
  std::visit(
      [&](auto& lhs) {
        using S = std::decay_t<decltype(lhs)>;
        const S& rhs = std::get<S>(b);
        if constexpr (std::is_same_v<S, CountSumState>) {
          lhs.n += rhs.n;
          lhs.sum += rhs.sum;
        } else if constexpr (std::is_same_v<S, MomentState>) {
          moment_merge(lhs, rhs);
        } else if constexpr (std::is_same_v<S, MinMaxState>) {
          if (rhs.n != 0) {
            if (lhs.n == 0) {
              lhs = rhs;
            } else {
              lhs.min_value = std::min(lhs.min_value, rhs.min_value);
              lhs.max_value = std::max(lhs.max_value, rhs.max_value);
              lhs.n += rhs.n;
            }
          }
        } else if constexpr (std::is_same_v<S, CovarianceState>) {
          if (rhs.n != 0) {
            if (lhs.n == 0) {
              lhs = rhs;
            } else {
              const double dx = rhs.shift_x - lhs.shift_x;
              const double dy = rhs.shift_y - lhs.shift_y;
              const double nb = static_cast<double>(rhs.n);
              lhs.sum_xy += rhs.sum_xy + dx * rhs.sum_y + dy * rhs.sum_x + nb * dx * dy;
              lhs.sum_x += rhs.sum_x + nb * dx;
              lhs.sum_y += rhs.sum_y + nb * dy;
              lhs.n += rhs.n;
            }
          }
        } else if constexpr (std::is_same_v<S, DistinctState>) {
          lhs.values.insert(rhs.values.begin(), rhs.values.end());
          lhs.n += rhs.n;
        } else if constexpr (std::is_same_v<S, RunState>) {
          run_merge(lhs, rhs);
        }
      },
      a);
}

PartialAggregate partial_merge(PartialAggregate a, const PartialAggregate& b) {
  merge_into(a, b);
  return a;
}

double finalize(const PartialAggregate& p, const MetricKind& kind) {
  switch (kind.family) {
    case MetricFamily::Count: {
      const auto* s = std::get_if<CountSumState>(&p);
      if (s == nullptr) throw_kind_mismatch(kind.family);
      return static_cast<double>(s->n);
    }
    case MetricFamily::Sum: {
      const auto* s = std::get_if<CountSumState>(&p);
      if (s == nullptr) throw_kind_mismatch(kind.family);
      return static_cast<double>(s->sum);
    }
    case MetricFamily::Avg: {
      const auto* s = std::get_if<CountSumState>(&p);
      if (s == nullptr) throw_kind_mismatch(kind.family);
      require_nonempty("average", s->n);
      return static_cast<double>(s->sum) / static_cast<double>(s->n);
    }
    case MetricFamily::Min:
    case MetricFamily::Max: {
      const auto* s = std::get_if<MinMaxState>(&p);
      if (s == nullptr) throw_kind_mismatch(kind.family);
      require_nonempty(kind.family == MetricFamily::Min ? "min" : "max", s->n);
      return kind.family == MetricFamily::Min ? s->min_value : s->max_value;
    }
    case MetricFamily::Variance:
    case MetricFamily::StdDev:
    case MetricFamily::CentralMoment: {
      const auto* s = std::get_if<MomentState>(&p);
      if (s == nullptr) throw_kind_mismatch(kind.family);
      require_nonempty("moment", s->n);
      if (kind.family == MetricFamily::CentralMoment) return central_moment(*s, kind.moment_order);
      const double m2 = std::max(0.0, central_moment(*s, 2));
      return kind.family == MetricFamily::Variance ? m2 : std::sqrt(m2);
    }
    case MetricFamily::Covariance: {
      const auto* s = std::get_if<CovarianceState>(&p);
      if (s == nullptr) throw_kind_mismatch(kind.family);
      require_nonempty("covariance", s->n);
      const double n = static_cast<double>(s->n);
      return s->sum_xy / n - (s->sum_x / n) * (s->sum_y / n);
    }
    case MetricFamily::DistinctCount: {
      const auto* s = std::get_if<DistinctState>(&p);
      if (s == nullptr) throw_kind_mismatch(kind.family);
      return static_cast<double>(s->values.size());
    }
    case MetricFamily::MonotonicRun: {
      const auto* s = std::get_if<RunState>(&p);
      if (s == nullptr) throw_kind_mismatch(kind.family);
      return static_cast<double>(s->longest);
    }
  }
  throw InvalidSpec("unknown metric family");
}

uint64_t absorbed_count(const PartialAggregate& p) {
  return std::visit([](const auto& s) { return s.n; }, p);
}

size_t approx_partial_bytes(const PartialAggregate& p) {
  size_t bytes = sizeof(PartialAggregate);
  if (const auto* d = std::get_if<DistinctState>(&p)) {
    for (const auto& v : d->values) bytes += v.capacity() + 48;  // node + hash slot guess
  }
  return bytes;
}

}  // namespace scube
