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

#include "scube/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_map>

namespace scube {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool values_equal(const MetricKind& kind, double a, double b) {
  if (kind.integer_valued()) return a == b;
  const double mag = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) <= 1e-9 * mag;
}

// ---------------------------------------------------------------------------
// Naive per-window recomputation. Everything below works from raw records
// with two-pass formulas; it shares no code with the aggregate algebra on
// purpose.
// ---------------------------------------------------------------------------

struct BaselineWindowState {
  std::unordered_map<std::string, std::vector<int64_t>> nums;
  std::unordered_map<std::string, std::vector<std::pair<int64_t, int64_t>>> pairs;
  std::unordered_map<std::string, std::vector<std::string>> texts;
  uint64_t bytes = 0;

  void clear() {
    nums.clear();
    pairs.clear();
    texts.clear();
    bytes = 0;
  }
};

std::string baseline_key(const TransactionRecord& rec, const std::vector<std::string>& group_by) {
  std::string key;
  for (size_t i = 0; i < group_by.size(); ++i) {
    if (i != 0) key.push_back('|');
    FieldRef f = record_field(rec, group_by[i]);
    if (f.type == FieldType::Text) key.append(f.text);
    else key.append(std::to_string(f.num));
  }
  return key;
}

void baseline_absorb(BaselineWindowState& st, const BenchQuery& q, const TransactionRecord& rec) {
  std::string key = baseline_key(rec, q.group_by);
  switch (q.metric.family) {
    case MetricFamily::Covariance: {
      auto& v = st.pairs[key];
      v.emplace_back(record_field(rec, q.metric.measure_field).num,
                     record_field(rec, q.metric.second_field).num);
      st.bytes += sizeof(std::pair<int64_t, int64_t>);
      break;
    }
    case MetricFamily::DistinctCount: {
      FieldRef f = record_field(rec, q.metric.measure_field);
      auto& v = st.texts[key];
      if (f.type == FieldType::Text) v.emplace_back(f.text);
      else v.emplace_back(std::to_string(f.num));
      st.bytes += v.back().size() + 32;
      break;
    }
    case MetricFamily::Count: {
      st.nums[key].push_back(0);
      st.bytes += sizeof(int64_t);
      break;
    }
    default: {
      st.nums[key].push_back(record_field(rec, q.metric.measure_field).num);
      st.bytes += sizeof(int64_t);
      break;
    }
  }
}

double baseline_statistic(const BenchQuery& q, const std::vector<int64_t>& nums,
                          const std::vector<std::pair<int64_t, int64_t>>& pairs,
                          const std::vector<std::string>& texts) {
  switch (q.metric.family) {
    case MetricFamily::Count:
      return static_cast<double>(nums.size());
    case MetricFamily::Sum: {
      int64_t s = 0;
      for (int64_t v : nums) s += v;
      return static_cast<double>(s);
    }
    case MetricFamily::Avg: {
      int64_t s = 0;
      for (int64_t v : nums) s += v;
      return static_cast<double>(s) / static_cast<double>(nums.size());
    }
    case MetricFamily::Min:
      return static_cast<double>(*std::min_element(nums.begin(), nums.end()));
    case MetricFamily::Max:
      return static_cast<double>(*std::max_element(nums.begin(), nums.end()));
    case MetricFamily::Variance:
    case MetricFamily::StdDev:
    case MetricFamily::CentralMoment: {
      const double n = static_cast<double>(nums.size());
      double mean = 0;
      for (int64_t v : nums) mean += static_cast<double>(v);
      mean /= n;
      const int k = q.metric.family == MetricFamily::CentralMoment ? q.metric.moment_order : 2;
      double m = 0;
      for (int64_t v : nums) m += std::pow(static_cast<double>(v) - mean, k);
      m /= n;
      if (q.metric.family == MetricFamily::StdDev) return std::sqrt(std::max(0.0, m));
      return m;
    }
    case MetricFamily::Covariance: {
      const double n = static_cast<double>(pairs.size());
      double mx = 0, my = 0;
      for (const auto& [x, y] : pairs) {
        mx += static_cast<double>(x);
        my += static_cast<double>(y);
      }
      mx /= n;
      my /= n;
      double c = 0;
      for (const auto& [x, y] : pairs)
        c += (static_cast<double>(x) - mx) * (static_cast<double>(y) - my);
      return c / n;
    }
    case MetricFamily::DistinctCount: {
      std::vector<std::string> sorted = texts;
      std::sort(sorted.begin(), sorted.end());
      return static_cast<double>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
    }
    case MetricFamily::MonotonicRun: {
      const bool inc = q.metric.direction == RunDirection::Increasing;
      uint64_t best = nums.empty() ? 0 : 1, cur = nums.empty() ? 0 : 1;
      for (size_t i = 1; i < nums.size(); ++i) {
        const bool continues = inc ? nums[i] > nums[i - 1] : nums[i] < nums[i - 1];
        cur = continues ? cur + 1 : 1;
        best = std::max(best, cur);
      }
      return static_cast<double>(best);
    }
  }
  throw InvalidSpec("unknown metric family");
}

using WindowValues = std::vector<std::pair<DimensionKey, double>>;

WindowValues baseline_window(const BenchQuery& q, std::span<const TransactionRecord> records,
                             size_t lo, size_t hi, BaselineWindowState& st, uint64_t memory_cap) {
  st.clear();
  for (size_t i = lo; i < hi; ++i) baseline_absorb(st, q, records[i]);
  if (st.bytes > memory_cap)
    throw BaselineExhausted("window buffer estimate " + std::to_string(st.bytes) +
                            " exceeds cap " + std::to_string(memory_cap));
  WindowValues out;
  static const std::vector<int64_t> no_nums;
  static const std::vector<std::pair<int64_t, int64_t>> no_pairs;
  static const std::vector<std::string> no_texts;
  auto emit = [&](const std::string& key, const std::vector<int64_t>& nums,
                  const std::vector<std::pair<int64_t, int64_t>>& pairs,
                  const std::vector<std::string>& texts) {
    out.emplace_back(DimensionKey{key}, baseline_statistic(q, nums, pairs, texts));
  };
  for (const auto& [key, nums] : st.nums) emit(key, nums, no_pairs, no_texts);
  for (const auto& [key, pairs] : st.pairs) emit(key, no_nums, pairs, no_texts);
  for (const auto& [key, texts] : st.texts) emit(key, no_nums, no_pairs, texts);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::string mismatch_detail(const CubeEngine::WindowBounds& bounds, const WindowValues& engine,
                            const WindowValues& baseline) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "mismatch in window [%lld,%lld): engine %zu keys, baseline %zu keys",
                static_cast<long long>(bounds.start), static_cast<long long>(bounds.end),
                engine.size(), baseline.size());
  return buf;
}

}  // namespace

BenchPlan BenchPlan::defaults() {
  BenchPlan plan;
  plan.queries = {
      BenchQuery{"avg_amt_by_acct", metric_avg("transAmt"), {"acctId"}},
      BenchQuery{"distinct_city_by_acct", metric_distinct("city"), {"acctId"}},
  };
  return plan;
}

void BenchPlan::validate() const {
  if (queries.empty()) throw InvalidSpec("bench plan has no queries");
  if (window_sizes.empty()) throw InvalidSpec("bench plan has no window sizes");
  if (step <= 0) throw InvalidSpec("bench step must be positive");
  for (Duration w : window_sizes)
    if (w <= 0 || w % step != 0)
      throw InvalidSpec("window sizes must be positive multiples of the step");
  if (repetitions < 1) throw InvalidSpec("repetitions must be at least 1");
  for (const auto& q : queries) {
    q.metric.validate();
    if (q.group_by.empty()) throw InvalidSpec("bench query '" + q.id + "' needs group-by fields");
  }
}

std::vector<CubeEngine::WindowBounds> plan_window_bounds(
    std::span<const TransactionRecord> records, Timestamp origin, Duration step, Duration window) {
  std::vector<CubeEngine::WindowBounds> bounds;
  if (records.empty()) return bounds;
  const Duration g = std::gcd(window, step);
  const Timestamp t_min = records.front().trans_time;
  const Timestamp t_max = records.back().trans_time;
  const Timestamp data_lo = origin + floor_div(t_min - origin, g) * g;
  const Timestamp data_hi = origin + (floor_div(t_max - origin, g) + 1) * g;
  const int64_t k0 = floor_div(data_lo - origin, step) + 1;
  const int64_t k1 = ceil_div(data_hi - origin, step);
  for (int64_t k = k0; k <= k1; ++k) {
    const Timestamp end = origin + k * step;
    bounds.push_back(CubeEngine::WindowBounds{std::max(end - window, data_lo), end});
  }
  return bounds;
}

BenchReport run_bench(const BenchPlan& plan, std::span<const TransactionRecord> records) {
  plan.validate();
  BenchReport report;

  for (const auto& q : plan.queries) {
    for (Duration window : plan.window_sizes) {
      const auto bounds = plan_window_bounds(records, plan.origin, plan.step, window);
      std::vector<WindowValues> engine_values;

      if (plan.mode != BenchMode::Baseline) {
        BenchRow row;
        row.query = q.id;
        row.window_size = window;
        row.mode = "engine";
        row.windows = bounds.size();
        double best = -1;
        for (int rep = 0; rep < plan.repetitions; ++rep) {
          EngineConfig cfg;
          cfg.shards = plan.shards;
          cfg.origin = plan.origin;
          CubeEngine engine(cfg);
          QuerySpec spec;
          spec.id = q.id;
          spec.metric = q.metric;
          spec.group_by = q.group_by;
          spec.window_size = window;
          spec.window_step = plan.step;
          engine.register_query(std::move(spec));

          const auto t0 = Clock::now();
          engine.ingest_batch(records);
          const double ingest = seconds_since(t0);

          const auto t1 = Clock::now();
          auto results = engine.evaluate_windows(q.id, bounds);
          const double eval = seconds_since(t1);

          if (best < 0 || ingest + eval < best) {
            best = ingest + eval;
            row.ingest_seconds = ingest;
            row.eval_seconds = eval;
          }
          if (rep == plan.repetitions - 1) {
            engine_values.clear();
            engine_values.reserve(results.size());
            for (auto& r : results) engine_values.push_back(std::move(r.values));
            row.approx_mem_bytes = engine.store().approx_bytes();
            row.shards = engine.store().shard_count();
          }
        }
        row.seconds = best;
        report.rows.push_back(std::move(row));
      }

      if (plan.mode != BenchMode::Engine) {
        BenchRow row;
        row.query = q.id;
        row.window_size = window;
        row.mode = "baseline";
        row.shards = 1;
        BaselineWindowState st;
        uint64_t peak_bytes = 0;
        bool mismatch = false;
        const auto t0 = Clock::now();
        try {
          size_t lo = 0, hi = 0;
          for (size_t w = 0; w < bounds.size(); ++w) {
            while (lo < records.size() && records[lo].trans_time < bounds[w].start) ++lo;
            while (hi < records.size() && records[hi].trans_time < bounds[w].end) ++hi;
            WindowValues values = baseline_window(q, records, lo, hi, st, plan.baseline_memory_cap);
            peak_bytes = std::max(peak_bytes, st.bytes);
            ++row.windows;
            if (w < engine_values.size() && !mismatch) {
              const WindowValues& ev = engine_values[w];
              bool same = ev.size() == values.size();
              for (size_t i = 0; same && i < ev.size(); ++i)
                same = ev[i].first == values[i].first &&
                       values_equal(q.metric, ev[i].second, values[i].second);
              if (!same) {
                mismatch = true;
                row.flag = mismatch_detail(bounds[w], ev, values);
              }
            }
          }
          row.seconds = seconds_since(t0);
          row.eval_seconds = row.seconds;
          row.approx_mem_bytes = peak_bytes;
          if (!engine_values.empty()) row.equal = mismatch ? 0 : 1;
        } catch (const BaselineExhausted&) {
          row.flag = "exhausted";
          row.seconds = std::nan("");
          row.eval_seconds = std::nan("");
          row.approx_mem_bytes = std::max(peak_bytes, st.bytes);
        }
        if (row.equal == 0) report.all_equal = false;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

bool compare_and_emit(const BenchReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "query,windowSize,mode,seconds,windows,equal,ingestSeconds,evalSeconds,flag,"
         "approxMemBytes,shards\n";
  char buf[64];
  auto fmt_seconds = [&](double s) -> std::string {
    if (std::isnan(s)) return "NA";
    std::snprintf(buf, sizeof(buf), "%.3f", s);
    return buf;
  };
  for (const auto& row : report.rows) {
    out << row.query << ',' << format_duration(row.window_size) << ',' << row.mode << ','
        << fmt_seconds(row.seconds) << ',' << row.windows << ','
        << (row.equal < 0 ? "" : (row.equal == 1 ? "true" : "false")) << ','
        << fmt_seconds(row.ingest_seconds) << ',' << fmt_seconds(row.eval_seconds) << ','
        << '"' << row.flag << '"' << ',' << row.approx_mem_bytes << ',' << row.shards << '\n';
  }
  if (!out) throw IoError("write failed on '" + path + "'");
  return report.all_equal;
}

std::vector<ThroughputRow> run_throughput(std::span<const TransactionRecord> records,
                                          std::span<const int> shard_counts, uint64_t lookups) {
  std::vector<ThroughputRow> rows;
  if (records.empty()) return rows;

  // Sampled keys and the latest full day for the read side.
  std::vector<DimensionKey> keys;
  for (size_t i = 0; i < records.size() && keys.size() < 1024; i += 97)
    keys.push_back(DimensionKey{records[i].acct_id});
  const Timestamp window_end =
      (floor_div(records.back().trans_time, kDay) + 1) * kDay;

  for (int shards : shard_counts) {
    EngineConfig cfg;
    cfg.shards = shards;
    cfg.granularity = kDay;
    CubeEngine engine(cfg);

    // The 16 simultaneously maintained metrics.
    const std::vector<std::pair<std::string, MetricKind>> metrics = {
        {"count_by_acct", metric_count()},
        {"sum_amt", metric_sum("transAmt")},
        {"avg_amt", metric_avg("transAmt")},
        {"min_amt", metric_min("transAmt")},
        {"max_amt", metric_max("transAmt")},
        {"var_amt", metric_variance("transAmt")},
        {"stddev_amt", metric_stddev("transAmt")},
        {"m3_amt", metric_central_moment("transAmt", 3)},
        {"m4_amt", metric_central_moment("transAmt", 4)},
        {"cov_amt_stat", metric_covariance("transAmt", "stat")},
        {"distinct_city", metric_distinct("city")},
        {"distinct_mer", metric_distinct("merId")},
        {"run_inc_amt", metric_run("transAmt", RunDirection::Increasing)},
        {"run_dec_amt", metric_run("transAmt", RunDirection::Decreasing)},
    };
    for (const auto& [id, kind] : metrics) {
      QuerySpec spec;
      spec.id = id;
      spec.metric = kind;
      spec.group_by = {"acctId"};
      spec.window_size = kDay;
      spec.window_step = kDay;
      engine.register_query(std::move(spec));
    }
    for (const auto& [id, kind] : {std::pair<std::string, MetricKind>{"sum_by_city", metric_sum("transAmt")},
                                   std::pair<std::string, MetricKind>{"count_by_mer", metric_count()}}) {
      QuerySpec spec;
      spec.id = id;
      spec.metric = kind;
      spec.group_by = {id == "sum_by_city" ? "city" : "merId"};
      spec.window_size = kDay;
      spec.window_step = kDay;
      engine.register_query(std::move(spec));
    }

    ThroughputRow row;
    row.shards = shards;
    row.records = records.size();

    const auto t0 = Clock::now();
    engine.ingest_batch(records);
    row.write_tps = static_cast<double>(records.size()) / seconds_since(t0);

    const auto t1 = Clock::now();
    double blackhole = 0;
    for (uint64_t i = 0; i < lookups; ++i) {
      auto v = engine.point_lookup("avg_amt", keys[i % keys.size()], window_end);
      if (v) blackhole += *v;
    }
    row.read_tps = static_cast<double>(lookups) / seconds_since(t1);
    if (blackhole == -1.0) row.read_tps = 0;  // keep the loop observable
    rows.push_back(row);
  }
  return rows;
}

}  // namespace scube
