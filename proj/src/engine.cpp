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

#include "scube/engine.hpp"

#include <algorithm>
#include <exception>
#include <thread>

namespace scube {

namespace {

// Sliding-window aggregation over two stacks: push absorbs new slices, the
// flip on eviction precomputes suffix merges, so evaluating W-slice windows
// advancing by one step costs O(1) amortized merges per window instead of
// O(W). Merge order follows slice time, which keeps RunState correct.
struct TwoStacks {
  struct Entry {
    int64_t index;
    PartialAggregate agg;
  };

  std::vector<Entry> front;       // back() is the oldest; agg covers it and all newer front entries
  std::vector<Entry> back_items;  // raw slice partials in arrival order
  std::optional<PartialAggregate> back_agg;

  void push(int64_t index, const PartialAggregate& p) {
    back_items.push_back(Entry{index, p});
    if (back_agg) merge_into(*back_agg, p);
    else back_agg = p;
  }

  void evict_before(int64_t bound) {
    while (true) {
      if (!front.empty()) {
        if (front.back().index >= bound) return;
        front.pop_back();
        continue;
      }
      if (back_items.empty()) return;
      front.reserve(back_items.size());
      for (size_t i = back_items.size(); i-- > 0;) {
        Entry e{back_items[i].index, std::move(back_items[i].agg)};
        if (!front.empty()) merge_into(e.agg, front.back().agg);
        front.push_back(std::move(e));
      }
      back_items.clear();
      back_agg.reset();
    }
  }

  std::optional<PartialAggregate> query() const {
    if (front.empty()) return back_agg;
    if (!back_agg) return front.back().agg;
    PartialAggregate r = front.back().agg;
    merge_into(r, *back_agg);
    return r;
  }
};

// Sliding distinct count: two-stacks would copy whole sets on every flip, so
// sets get their own slider. Covered slices contribute each value once; a
// value is distinct-visible while its reference count is nonzero. The views
// point into the store's DistinctState sets, which are stable during
// evaluation.
struct SlidingDistinct {
  std::unordered_map<std::string_view, uint32_t> counts;
  size_t covered = 0;

  void add(const PartialAggregate& p) {
    for (const auto& v : std::get<DistinctState>(p).values) ++counts[std::string_view(v)];
    ++covered;
  }
  void remove(const PartialAggregate& p) {
    for (const auto& v : std::get<DistinctState>(p).values) {
      auto it = counts.find(std::string_view(v));
      if (it != counts.end() && --it->second == 0) counts.erase(it);
    }
    --covered;
  }
};

}  // namespace

CubeEngine::CubeEngine(EngineConfig cfg) : cfg_(cfg) {
  if (cfg_.allowed_lateness < 0) throw InvalidSpec("allowed lateness cannot be negative");
  if (cfg_.granularity && *cfg_.granularity <= 0) throw InvalidSpec("granularity must be positive");
}

CubeEngine::~CubeEngine() = default;
CubeEngine::CubeEngine(CubeEngine&&) noexcept = default;
CubeEngine& CubeEngine::operator=(CubeEngine&&) noexcept = default;

const std::string& CubeEngine::register_query(QuerySpec spec) {
  if (spec.id.empty()) throw InvalidSpec("query id must not be empty");
  for (const auto& q : queries_)
    if (q.spec.id == spec.id) throw DuplicateQuery("query '" + spec.id + "' already registered");

  if (spec.time_range) {
    const auto [start, end] = *spec.time_range;
    if (start >= end) throw InvalidSpec("fixed time range must be non-empty");
    if (start < cfg_.origin) throw InvalidSpec("fixed time range precedes the origin");
    if (spec.window_size == 0) spec.window_size = end - start;
    if (spec.window_step == 0) spec.window_step = spec.window_size;
  }
  if (spec.window_step <= 0 || spec.window_size < spec.window_step)
    throw InvalidSpec("need window size >= step > 0 for query '" + spec.id + "'");
  spec.metric.validate();
  if (spec.group_by.empty()) throw InvalidSpec("query '" + spec.id + "' needs group-by fields");
  for (const auto& f : spec.group_by)
    if (!schema_has_field(f)) throw InvalidSpec("unknown group-by field '" + f + "'");
  if (spec.trigger.kind == TriggerKind::ClockDriven && spec.trigger.interval <= 0)
    throw InvalidSpec("clock-driven query '" + spec.id + "' needs a positive interval");
  if (spec.metric.family == MetricFamily::MonotonicRun && cfg_.allowed_lateness > 0)
    throw InvalidSpec("run metrics require in-order streams; allowed lateness must be 0");

  const Duration fixed = store_ ? store_->granularity() : cfg_.granularity.value_or(0);
  if (fixed > 0) {
    const bool ok = spec.window_size % fixed == 0 && spec.window_step % fixed == 0 &&
                    (!spec.time_range || ((spec.time_range->first - cfg_.origin) % fixed == 0 &&
                                          (spec.time_range->second - cfg_.origin) % fixed == 0));
    if (!ok)
      throw GranularityMismatch("query '" + spec.id + "' does not align with granularity " +
                                format_duration(fixed));
  }

  Query q;
  q.spec = std::move(spec);
  if (store_) q.slot = store_->register_metric(q.spec.metric, q.spec.group_by);
  queries_.push_back(std::move(q));
  return queries_.back().spec.id;
}

void CubeEngine::register_sequence(SequencePattern pattern) {
  for (const auto& ms : matchers_)
    if (ms.pattern.id == pattern.id)
      throw DuplicateQuery("sequence '" + pattern.id + "' already registered");
  // Compile once for validation, then one matcher per shard once frozen.
  SequenceMatcher::compile(pattern);
  MatcherSet ms;
  ms.pattern = std::move(pattern);
  if (store_) {
    for (int s = 0; s < store_->shard_count(); ++s)
      ms.per_shard.push_back(SequenceMatcher::compile(ms.pattern));
  }
  matchers_.push_back(std::move(ms));
}

void CubeEngine::on_result(std::function<void(const WindowResult&)> sink) {
  result_sink_ = std::move(sink);
}

void CubeEngine::on_match(std::function<void(const CompletedMatch&)> sink) {
  match_sink_ = std::move(sink);
}

void CubeEngine::deliver(const std::vector<WindowResult>& results) const {
  if (!result_sink_) return;
  for (const auto& r : results) result_sink_(r);
}

void CubeEngine::freeze() {
  if (store_) return;

  Duration g;
  if (cfg_.granularity) {
    g = *cfg_.granularity;
  } else if (!queries_.empty()) {
    std::vector<GranularityTerm> terms;
    terms.reserve(queries_.size());
    for (const auto& q : queries_) {
      GranularityTerm t{q.spec.window_size, q.spec.window_step, 0};
      if (q.spec.time_range) {
        terms.push_back(GranularityTerm{q.spec.window_size, q.spec.window_step,
                                        q.spec.time_range->first - cfg_.origin});
        t.offset = q.spec.time_range->second - cfg_.origin;
      }
      terms.push_back(t);
    }
    g = compute_granularity(terms);
  } else {
    g = kDay;  // record-only store, nothing registered to derive from
  }

  SliceStore::Config sc;
  sc.granularity = g;
  sc.origin = cfg_.origin;
  sc.shards = cfg_.shards > 0 ? cfg_.shards
                              : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  store_ = std::make_unique<SliceStore>(sc);
  for (auto& q : queries_) q.slot = store_->register_metric(q.spec.metric, q.spec.group_by);
  for (auto& ms : matchers_) {
    ms.per_shard.clear();
    for (int s = 0; s < store_->shard_count(); ++s)
      ms.per_shard.push_back(SequenceMatcher::compile(ms.pattern));
  }
}

void CubeEngine::require_frozen() const {
  if (!store_) throw Error("engine has not ingested anything yet");
}

const SliceStore& CubeEngine::store() const {
  require_frozen();
  return *store_;
}

Duration CubeEngine::granularity() const {
  if (store_) return store_->granularity();
  if (cfg_.granularity) return *cfg_.granularity;
  throw Error("granularity not fixed yet");
}

const CubeEngine::Query& CubeEngine::find_query(const std::string& id) const {
  for (const auto& q : queries_)
    if (q.spec.id == id) return q;
  throw UnknownQuery("no query '" + id + "'");
}

CubeEngine::Query& CubeEngine::find_query(const std::string& id) {
  return const_cast<Query&>(static_cast<const CubeEngine*>(this)->find_query(id));
}

const QuerySpec& CubeEngine::query(const std::string& id) const { return find_query(id).spec; }

std::vector<std::string> CubeEngine::query_ids() const {
  std::vector<std::string> ids;
  ids.reserve(queries_.size());
  for (const auto& q : queries_) ids.push_back(q.spec.id);
  return ids;
}

Timestamp CubeEngine::align_check(Timestamp t, const char* what) const {
  const Duration g = granularity();
  if (((t - cfg_.origin) % g + g) % g != 0)
    throw AlignmentError(std::string(what) + " " + std::to_string(t) +
                         " is not aligned to granularity " + format_duration(g));
  return t;
}

void CubeEngine::seal_by_watermark() {
  if (watermark_ == INT64_MIN) return;
  const Timestamp bound = watermark_ - cfg_.allowed_lateness;
  if (bound <= cfg_.origin) return;
  store_->seal_below(floor_div(bound - cfg_.origin, store_->granularity()));
}

void CubeEngine::feed_sequences(const TransactionRecord& rec, uint64_t event_id, int only_shard,
                                std::vector<CompletedMatch>* collect) {
  for (auto& ms : matchers_) {
    if (ms.per_shard.empty()) continue;
    const DimensionKey key = ms.per_shard[0].key_of(rec);
    const int target = store_->shard_of(key);
    if (only_shard != SliceStore::kAllShards && target != only_shard) continue;
    for (auto& match : ms.per_shard[static_cast<size_t>(target)].feed(rec, event_id)) {
      if (collect) {
        collect->push_back(std::move(match));
      } else {
        ++sequence_matches_;
        if (match_sink_) match_sink_(match);
      }
    }
  }
}

std::vector<WindowResult> CubeEngine::ingest(const TransactionRecord& rec) {
  freeze();
  const Timestamp t = rec.trans_time;
  if (watermark_ != INT64_MIN && t < watermark_ - cfg_.allowed_lateness) {
    ++dropped_late_;
    return {};
  }

  store_->ingest(rec);
  const bool revised = watermark_ != INT64_MIN && t < watermark_;
  const uint64_t event_id = ingested_++;
  watermark_ = std::max(watermark_, t);
  seal_by_watermark();

  if (!revised) feed_sequences(rec, event_id, SliceStore::kAllShards, nullptr);

  std::vector<WindowResult> emissions;
  const Duration g = store_->granularity();
  for (auto& q : queries_) {
    if (q.spec.trigger.kind != TriggerKind::DataDriven || q.spec.time_range) continue;
    const Duration step = q.spec.window_step;
    const Timestamp end = cfg_.origin + (floor_div(t - cfg_.origin, step) + 1) * step;
    const Timestamp start = end - q.spec.window_size;
    const int64_t idx_from = start <= cfg_.origin ? 0 : floor_div(start - cfg_.origin, g);
    const int64_t idx_to = floor_div(end - cfg_.origin, g);
    const DimensionKey key = store_->key_for(rec, q.slot);
    auto partial = store_->fold_key_range(q.slot, key, idx_from, idx_to);
    if (!partial) continue;
    WindowResult r;
    r.query_id = q.spec.id;
    r.window_start = start;
    r.window_end = end;
    r.emitted_at = watermark_;
    r.revised = revised;
    r.values.emplace_back(key, finalize(*partial, q.spec.metric));
    emissions.push_back(std::move(r));
  }
  deliver(emissions);
  return emissions;
}

void CubeEngine::ingest_batch(std::span<const TransactionRecord> records) {
  freeze();
  if (records.empty()) return;

  const int shards = store_->shard_count();
  const Timestamp wm0 = watermark_;
  const uint64_t base_event = ingested_;
  const Duration lateness = cfg_.allowed_lateness;

  std::vector<std::vector<CompletedMatch>> matches(static_cast<size_t>(shards));
  uint64_t accepted0 = 0;
  uint64_t dropped0 = 0;
  Timestamp wm_final = wm0;

  auto run_shard = [&](int shard, uint64_t* accepted_out, uint64_t* dropped_out,
                       Timestamp* wm_out) {
    Timestamp wm = wm0;
    uint64_t accepted = 0;
    uint64_t dropped = 0;
    for (const auto& rec : records) {
      if (wm != INT64_MIN && rec.trans_time < wm - lateness) {
        ++dropped;
        continue;
      }
      const uint64_t event_id = base_event + accepted;
      ++accepted;
      wm = std::max(wm, rec.trans_time);
      store_->ingest(rec, shard);
      feed_sequences(rec, event_id, shard, &matches[static_cast<size_t>(shard)]);
    }
    if (accepted_out) *accepted_out = accepted;
    if (dropped_out) *dropped_out = dropped;
    if (wm_out) *wm_out = wm;
  };

  if (shards == 1) {
    run_shard(0, &accepted0, &dropped0, &wm_final);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<size_t>(shards));
    std::vector<std::jthread> workers;
    workers.reserve(static_cast<size_t>(shards));
    for (int s = 0; s < shards; ++s) {
      workers.emplace_back([&, s] {
        try {
          if (s == 0) run_shard(0, &accepted0, &dropped0, &wm_final);
          else run_shard(s, nullptr, nullptr, nullptr);
        } catch (...) {
          errors[static_cast<size_t>(s)] = std::current_exception();
        }
      });
    }
    workers.clear();  // join
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  ingested_ += accepted0;
  dropped_late_ += dropped0;
  watermark_ = std::max(watermark_, wm_final);
  seal_by_watermark();

  for (auto& per_shard : matches) {
    for (auto& m : per_shard) {
      ++sequence_matches_;
      if (match_sink_) match_sink_(m);
    }
  }
}

WindowResult CubeEngine::fold_window(const Query& q, Timestamp start, Timestamp end) const {
  WindowResult r;
  r.query_id = q.spec.id;
  r.window_start = start;
  r.window_end = end;
  r.emitted_at = watermark_;
  if (!store_ || end <= cfg_.origin) return r;

  const Duration g = store_->granularity();
  const int64_t idx_from = start <= cfg_.origin ? 0 : floor_div(start - cfg_.origin, g);
  const int64_t idx_to = floor_div(end - cfg_.origin, g);
  auto folded = store_->fold_range(q.slot, idx_from, idx_to);
  r.values.reserve(folded.size());
  for (auto& [key, partial] : folded)
    r.values.emplace_back(key, finalize(partial, q.spec.metric));
  std::sort(r.values.begin(), r.values.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return r;
}

WindowResult CubeEngine::evaluate_window(const std::string& query_id, Timestamp window_end) const {
  const Query& q = find_query(query_id);
  if (!store_) {
    WindowResult r;
    r.query_id = query_id;
    r.window_start = window_end - q.spec.window_size;
    r.window_end = window_end;
    return r;
  }
  align_check(window_end, "window end");
  return fold_window(q, window_end - q.spec.window_size, window_end);
}

WindowResult CubeEngine::evaluate_range(const std::string& query_id, Timestamp start,
                                        Timestamp end) const {
  const Query& q = find_query(query_id);
  if (start >= end) throw InvalidRange("range start must precede end");
  if (!store_) {
    WindowResult r;
    r.query_id = query_id;
    r.window_start = start;
    r.window_end = end;
    return r;
  }
  align_check(start, "range start");
  align_check(end, "range end");
  return fold_window(q, start, end);
}

std::vector<WindowResult> CubeEngine::evaluate_windows(const std::string& query_id,
                                                       std::span<const WindowBounds> bounds) const {
  const Query& q = find_query(query_id);
  std::vector<WindowResult> results;
  results.reserve(bounds.size());
  for (size_t i = 0; i < bounds.size(); ++i) {
    if (bounds[i].start >= bounds[i].end) throw InvalidRange("window bounds must be non-empty");
    if (i > 0 && (bounds[i].start < bounds[i - 1].start || bounds[i].end < bounds[i - 1].end))
      throw InvalidRange("window bounds must ascend");
    WindowResult r;
    r.query_id = query_id;
    r.window_start = bounds[i].start;
    r.window_end = bounds[i].end;
    r.emitted_at = watermark_;
    results.push_back(std::move(r));
  }
  if (!store_ || bounds.empty()) return results;

  const Duration g = store_->granularity();
  std::vector<std::pair<int64_t, int64_t>> idx_bounds;
  idx_bounds.reserve(bounds.size());
  for (const auto& b : bounds) {
    align_check(b.start, "window start");
    align_check(b.end, "window end");
    const int64_t from = b.start <= cfg_.origin ? 0 : floor_div(b.start - cfg_.origin, g);
    const int64_t to = b.end <= cfg_.origin ? 0 : floor_div(b.end - cfg_.origin, g);
    idx_bounds.emplace_back(from, to);
  }
  const int64_t lo = idx_bounds.front().first;
  const int64_t hi = idx_bounds.back().second;

  const bool distinct = q.spec.metric.family == MetricFamily::DistinctCount;
  auto series = store_->collect_series(q.slot, lo, hi);
  for (const auto& [key, points] : series) {
    if (distinct) {
      SlidingDistinct sd;
      size_t next_add = 0, next_remove = 0;
      for (size_t w = 0; w < idx_bounds.size(); ++w) {
        const auto [from, to] = idx_bounds[w];
        while (next_add < points.size() && points[next_add].index < to)
          sd.add(*points[next_add++].partial);
        while (next_remove < next_add && points[next_remove].index < from)
          sd.remove(*points[next_remove++].partial);
        if (sd.covered > 0)
          results[w].values.emplace_back(key, static_cast<double>(sd.counts.size()));
      }
      continue;
    }
    TwoStacks ts;
    size_t next = 0;
    for (size_t w = 0; w < idx_bounds.size(); ++w) {
      const auto [from, to] = idx_bounds[w];
      while (next < points.size() && points[next].index < to) {
        ts.push(points[next].index, *points[next].partial);
        ++next;
      }
      ts.evict_before(from);
      if (auto agg = ts.query())
        results[w].values.emplace_back(key, finalize(*agg, q.spec.metric));
    }
  }
  return results;
}

std::vector<CubeEngine::WindowBounds> CubeEngine::planned_windows(
    const std::string& query_id) const {
  const Query& q = find_query(query_id);
  if (q.spec.time_range) return {WindowBounds{q.spec.time_range->first, q.spec.time_range->second}};
  if (!store_) return {};
  auto ext = store_->extent();
  if (!ext) return {};

  const Duration g = store_->granularity();
  const Timestamp data_lo = cfg_.origin + ext->first * g;
  const Timestamp data_hi = cfg_.origin + (ext->second + 1) * g;
  const Duration step = q.spec.window_step;

  std::vector<WindowBounds> bounds;
  const int64_t k0 = floor_div(data_lo - cfg_.origin, step) + 1;
  const int64_t k1 = ceil_div(data_hi - cfg_.origin, step);
  for (int64_t k = k0; k <= k1; ++k) {
    const Timestamp end = cfg_.origin + k * step;
    const Timestamp start = std::max(end - q.spec.window_size, data_lo);
    bounds.push_back(WindowBounds{start, end});
  }
  return bounds;
}

std::vector<WindowResult> CubeEngine::evaluate_all_windows(const std::string& query_id) const {
  auto bounds = planned_windows(query_id);
  return evaluate_windows(query_id, bounds);
}

std::optional<double> CubeEngine::point_lookup(const std::string& query_id, const DimensionKey& key,
                                               Timestamp window_end) const {
  const Query& q = find_query(query_id);
  if (!store_) return std::nullopt;
  align_check(window_end, "window end");
  if (window_end <= cfg_.origin) return std::nullopt;
  const Duration g = store_->granularity();
  const Timestamp start = window_end - q.spec.window_size;
  const int64_t idx_from = start <= cfg_.origin ? 0 : floor_div(start - cfg_.origin, g);
  const int64_t idx_to = floor_div(window_end - cfg_.origin, g);
  auto partial = store_->fold_key_range(q.slot, key, idx_from, idx_to);
  if (!partial) return std::nullopt;
  return finalize(*partial, q.spec.metric);
}

std::vector<WindowResult> CubeEngine::emit_clock_boundary(Timestamp boundary) {
  std::vector<WindowResult> out;
  if (watermark_ == INT64_MIN) return out;
  const Timestamp complete_limit = std::min(boundary, watermark_ - cfg_.allowed_lateness);
  for (auto& q : queries_) {
    if (q.spec.trigger.kind != TriggerKind::ClockDriven || q.spec.time_range) continue;
    const Duration interval = q.spec.trigger.interval;
    if (((boundary - cfg_.origin) % interval + interval) % interval != 0) continue;
    if (complete_limit < cfg_.origin) continue;
    const Duration step = q.spec.window_step;
    const Timestamp end = cfg_.origin + floor_div(complete_limit - cfg_.origin, step) * step;
    if (end - q.spec.window_size < cfg_.origin) continue;  // no complete full window yet
    WindowResult r = fold_window(q, end - q.spec.window_size, end);
    r.emitted_at = boundary;
    out.push_back(std::move(r));
    q.last_clock_emitted_end = std::max(q.last_clock_emitted_end, end);
  }
  return out;
}

std::vector<WindowResult> CubeEngine::advance_clock(Timestamp now) {
  if (clock_now_ != INT64_MIN && now < clock_now_)
    throw ClockError("clock regressed from " + std::to_string(clock_now_) + " to " +
                     std::to_string(now));
  std::vector<WindowResult> out;
  if (store_) {
    // Every crossed boundary of every clock-driven query emits once, in
    // boundary order.
    std::vector<Timestamp> boundaries;
    for (const auto& q : queries_) {
      if (q.spec.trigger.kind != TriggerKind::ClockDriven || q.spec.time_range) continue;
      const Duration interval = q.spec.trigger.interval;
      const Timestamp prev = clock_now_ == INT64_MIN ? cfg_.origin : clock_now_;
      for (int64_t k = floor_div(prev - cfg_.origin, interval) + 1;
           cfg_.origin + k * interval <= now; ++k)
        boundaries.push_back(cfg_.origin + k * interval);
    }
    std::sort(boundaries.begin(), boundaries.end());
    boundaries.erase(std::unique(boundaries.begin(), boundaries.end()), boundaries.end());
    for (Timestamp b : boundaries) {
      auto emitted = emit_clock_boundary(b);
      out.insert(out.end(), std::make_move_iterator(emitted.begin()),
                 std::make_move_iterator(emitted.end()));
    }
    for (auto& ms : matchers_)
      for (auto& m : ms.per_shard) m.expire(watermark_ == INT64_MIN ? now : watermark_);
  }
  clock_now_ = std::max(clock_now_ == INT64_MIN ? now : clock_now_, now);
  deliver(out);
  return out;
}

std::vector<WindowResult> CubeEngine::finish() {
  std::vector<WindowResult> out;
  finished_ = true;
  if (!store_) return out;

  if (auto ext = store_->extent()) store_->seal_below(ext->second + 1);

  for (auto& q : queries_) {
    if (q.spec.time_range) {
      out.push_back(fold_window(q, q.spec.time_range->first, q.spec.time_range->second));
      continue;
    }
    if (q.spec.trigger.kind != TriggerKind::ClockDriven || watermark_ == INT64_MIN) continue;
    const Duration step = q.spec.window_step;
    const Timestamp final_end = cfg_.origin + ceil_div(watermark_ + 1 - cfg_.origin, step) * step;
    Timestamp first = q.last_clock_emitted_end == INT64_MIN
                          ? cfg_.origin + ceil_div(q.spec.window_size, step) * step
                          : q.last_clock_emitted_end + step;
    for (Timestamp end = first; end <= final_end; end += step) {
      if (end - q.spec.window_size < cfg_.origin) continue;
      out.push_back(fold_window(q, end - q.spec.window_size, end));
      q.last_clock_emitted_end = end;
    }
  }
  deliver(out);
  return out;
}

EngineCounters CubeEngine::counters() const {
  EngineCounters c;
  c.ingested = ingested_;
  c.dropped_late = dropped_late_;
  c.sequence_matches = sequence_matches_;
  if (store_) {
    c.update_calls = store_->update_calls();
    c.partial_reads = store_->partial_reads();
  }
  return c;
}

}  // namespace scube
