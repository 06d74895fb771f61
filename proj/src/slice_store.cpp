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

#include "scube/slice_store.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>

namespace scube {

namespace {

constexpr char kSnapshotMagic[6] = {'S', 'C', 'U', 'B', 'E', '1'};
constexpr uint32_t kSnapshotVersion = 1;

// Little-endian buffer writer for snapshots.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(uint32_t v) { raw(&v, sizeof v); }
  void u64(uint64_t v) { raw(&v, sizeof v); }
  void i64(int64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    buf_.append(s.data(), s.size());
  }
  void patch_u64(size_t pos, uint64_t v) { std::memcpy(buf_.data() + pos, &v, sizeof v); }
  size_t size() const { return buf_.size(); }
  const std::string& bytes() const { return buf_; }

 private:
  void raw(const void* p, size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string buf_;
};

// Bounds-checked reader; every overrun reports the offending byte offset.
class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}

  uint8_t u8() { return static_cast<uint8_t>(take(1)[0]); }
  uint32_t u32() { return read_as<uint32_t>(); }
  uint64_t u64() { return read_as<uint64_t>(); }
  int64_t i64() { return read_as<int64_t>(); }
  double f64() { return read_as<double>(); }
  std::string str() {
    uint32_t n = u32();
    const char* p = take(n);
    return std::string(p, n);
  }
  size_t pos() const { return pos_; }
  bool exhausted() const { return pos_ == data_.size(); }

 private:
  template <typename T>
  T read_as() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  const char* take(size_t n) {
    if (pos_ + n > data_.size())
      throw SnapshotError("truncated snapshot at byte " + std::to_string(pos_));
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::string data_;
  size_t pos_ = 0;
};

void write_partial(ByteWriter& w, const PartialAggregate& p) {
  w.u8(static_cast<uint8_t>(p.index()));
  if (const auto* cs = std::get_if<CountSumState>(&p)) {
    w.u64(cs->n);
    w.i64(cs->sum);
  } else if (const auto* m = std::get_if<MomentState>(&p)) {
    w.u64(m->n);
    w.u8(m->order);
    w.f64(m->shift);
    for (int j = 0; j < m->order; ++j) w.f64(m->pow[static_cast<size_t>(j)]);
  } else if (const auto* mm = std::get_if<MinMaxState>(&p)) {
    w.u64(mm->n);
    w.f64(mm->min_value);
    w.f64(mm->max_value);
  } else if (const auto* cv = std::get_if<CovarianceState>(&p)) {
    w.u64(cv->n);
    w.f64(cv->shift_x);
    w.f64(cv->shift_y);
    w.f64(cv->sum_x);
    w.f64(cv->sum_y);
    w.f64(cv->sum_xy);
  } else if (const auto* d = std::get_if<DistinctState>(&p)) {
    w.u64(d->n);
    w.u64(d->values.size());
    std::vector<std::string_view> sorted(d->values.begin(), d->values.end());
    std::sort(sorted.begin(), sorted.end());
    for (auto v : sorted) w.str(v);
  } else if (const auto* r = std::get_if<RunState>(&p)) {
    w.u64(r->n);
    w.u8(static_cast<uint8_t>(r->direction));
    w.f64(r->first);
    w.f64(r->last);
    w.u64(r->longest);
    w.u64(r->prefix);
    w.u64(r->suffix);
  }
}

PartialAggregate read_partial(ByteReader& r) {
  const uint8_t tag = r.u8();
  switch (tag) {
    case 0: {
      CountSumState s;
      s.n = r.u64();
      s.sum = r.i64();
      return s;
    }
    case 1: {
      MomentState s;
      s.n = r.u64();
      s.order = r.u8();
      if (s.order < 1 || s.order > kMaxMomentOrder)
        throw SnapshotError("bad moment order at byte " + std::to_string(r.pos()));
      s.shift = r.f64();
      for (int j = 0; j < s.order; ++j) s.pow[static_cast<size_t>(j)] = r.f64();
      return s;
    }
    case 2: {
      MinMaxState s;
      s.n = r.u64();
      s.min_value = r.f64();
      s.max_value = r.f64();
      return s;
    }
    case 3: {
      CovarianceState s;
      s.n = r.u64();
      s.shift_x = r.f64();
      s.shift_y = r.f64();
      s.sum_x = r.f64();
      s.sum_y = r.f64();
      s.sum_xy = r.f64();
      return s;
    }
    case 4: {
      DistinctState s;
      s.n = r.u64();
      uint64_t count = r.u64();
      s.values.reserve(count);
      for (uint64_t i = 0; i < count; ++i) s.values.insert(r.str());
      return s;
    }
    case 5: {
      RunState s;
      s.n = r.u64();
      s.direction = static_cast<RunDirection>(r.u8());
      s.first = r.f64();
      s.last = r.f64();
      s.longest = r.u64();
      s.prefix = r.u64();
      s.suffix = r.u64();
      return s;
    }
    default:
      throw SnapshotError("unknown partial tag " + std::to_string(tag) + " at byte " +
                          std::to_string(r.pos()));
  }
}

}  // namespace

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

Duration compute_granularity(std::span<const GranularityTerm> terms) {
  if (terms.empty()) throw InvalidSpec("no queries to derive a granularity from");
  Duration g = 0;
  for (const auto& t : terms) {
    if (t.window <= 0 || t.step <= 0)
      throw InvalidSpec("window and step must be positive durations");
    if (t.offset < 0) throw InvalidSpec("window offset before the origin");
    g = std::gcd(g, t.window);
    g = std::gcd(g, t.step);
    g = std::gcd(g, t.offset);
  }
  return g;
}

int64_t slice_index_for(Timestamp t, Duration granularity, Timestamp origin) {
  if (granularity <= 0) throw InvalidSpec("granularity must be positive");
  if (t < origin)
    throw OutOfRange("timestamp " + std::to_string(t) + " precedes origin " + std::to_string(origin));
  return floor_div(t - origin, granularity);
}

SliceStore::SliceStore(const Config& cfg) : granularity_(cfg.granularity), origin_(cfg.origin) {
  if (cfg.granularity <= 0) throw InvalidSpec("granularity must be positive");
  if (cfg.shards < 1) throw InvalidSpec("shard count must be at least 1");
  shards_.resize(static_cast<size_t>(cfg.shards));
}

SliceStore::SliceStore(SliceStore&& other) noexcept
    : granularity_(other.granularity_),
      origin_(other.origin_),
      shards_(std::move(other.shards_)),
      slots_(std::move(other.slots_)),
      groups_(std::move(other.groups_)),
      sealed_below_(other.sealed_below_),
      force_sealed_(std::move(other.force_sealed_)),
      partial_reads_(other.partial_reads_.load(std::memory_order_relaxed)) {}

SliceStore& SliceStore::operator=(SliceStore&& other) noexcept {
  if (this != &other) {
    granularity_ = other.granularity_;
    origin_ = other.origin_;
    shards_ = std::move(other.shards_);
    slots_ = std::move(other.slots_);
    groups_ = std::move(other.groups_);
    sealed_below_ = other.sealed_below_;
    force_sealed_ = std::move(other.force_sealed_);
    partial_reads_.store(other.partial_reads_.load(std::memory_order_relaxed),
                         std::memory_order_relaxed);
  }
  return *this;
}

int SliceStore::register_metric(const MetricKind& kind, const std::vector<std::string>& group_by) {
  kind.validate();
  if (group_by.empty()) throw InvalidSpec("metric needs at least one group-by field");
  for (const auto& f : group_by)
    if (!schema_has_field(f)) throw InvalidSpec("unknown group-by field '" + f + "'");

  for (size_t s = 0; s < slots_.size(); ++s) {
    if (slots_[s].kind == kind && groups_[static_cast<size_t>(slots_[s].group)].fields == group_by)
      return static_cast<int>(s);
  }

  int group = -1;
  for (size_t g = 0; g < groups_.size(); ++g)
    if (groups_[g].fields == group_by) group = static_cast<int>(g);
  if (group < 0) {
    group = static_cast<int>(groups_.size());
    groups_.push_back(KeyGroup{group_by, {}});
  }

  SlotDef def;
  def.kind = kind;
  def.group = group;
  def.pos = static_cast<int>(groups_[static_cast<size_t>(group)].slots.size());
  slots_.push_back(def);
  int slot = static_cast<int>(slots_.size()) - 1;
  groups_[static_cast<size_t>(group)].slots.push_back(slot);
  return slot;
}

const std::vector<std::string>& SliceStore::slot_group_by(int slot) const {
  return groups_[static_cast<size_t>(slots_[static_cast<size_t>(slot)].group)].fields;
}

void SliceStore::build_key(const TransactionRecord& rec, const KeyGroup& group,
                           std::string& out) const {
  out.clear();
  for (size_t i = 0; i < group.fields.size(); ++i) {
    if (i != 0) out.push_back('|');
    FieldRef f = record_field(rec, group.fields[i]);
    if (f.type == FieldType::Text) {
      out.append(f.text);
    } else {
      char buf[24];
      int n = std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(f.num));
      out.append(buf, static_cast<size_t>(n));
    }
  }
}

MeasureValue SliceStore::extract_measure(const TransactionRecord& rec, const MetricKind& kind,
                                         std::string& scratch) const {
  switch (kind.family) {
    case MetricFamily::Count:
      return std::monostate{};
    case MetricFamily::Sum:
    case MetricFamily::Avg:
      return record_field(rec, kind.measure_field).num;
    case MetricFamily::Min:
    case MetricFamily::Max:
    case MetricFamily::Variance:
    case MetricFamily::StdDev:
    case MetricFamily::CentralMoment:
    case MetricFamily::MonotonicRun:
      return static_cast<double>(record_field(rec, kind.measure_field).num);
    case MetricFamily::Covariance:
      return std::pair<double, double>(
          static_cast<double>(record_field(rec, kind.measure_field).num),
          static_cast<double>(record_field(rec, kind.second_field).num));
    case MetricFamily::DistinctCount: {
      FieldRef f = record_field(rec, kind.measure_field);
      if (f.type == FieldType::Text) return f.text;
      scratch = std::to_string(f.num);
      return std::string_view(scratch);
    }
  }
  throw InvalidSpec("unknown metric family");
}

void SliceStore::ingest(const TransactionRecord& rec, int only_shard) {
  const int64_t index = slice_index_for(rec.trans_time, granularity_, origin_);
  if (sealed(index))
    throw SealedSliceWrite("slice " + std::to_string(index) + " is sealed");

  auto slice_of = [&](int s) -> ShardSlice& {
    Shard& shard = shards_[static_cast<size_t>(s)];
    if (shard.memo_index != index) {
      shard.memo_slice = &shard.slices[index];
      shard.memo_index = index;
    }
    return *shard.memo_slice;
  };

  // Every record is counted exactly once, in the shard that owns its first
  // group's key (shard 0 when no metrics are registered).
  std::string key_buf;
  std::string scratch;
  bool counted = false;
  for (size_t g = 0; g < groups_.size(); ++g) {
    const KeyGroup& group = groups_[g];
    build_key(rec, group, key_buf);
    const int target = static_cast<int>(fnv1a(key_buf) % shards_.size());
    const bool owner = g == 0 && (only_shard == kAllShards || only_shard == target);
    if (only_shard != kAllShards && target != only_shard) continue;

    ShardSlice& slice = slice_of(target);
    if (owner) {
      ++slice.record_count;
      counted = true;
    }
    if (slice.tables.size() < groups_.size()) slice.tables.resize(groups_.size());
    Table& table = slice.tables[g];
    auto it = table.find(std::string_view(key_buf));
    if (it == table.end()) it = table.try_emplace(DimensionKey{key_buf}).first;
    std::vector<PartialAggregate>& partials = it->second;
    // Keys created before a later metric registration carry fewer partials;
    // top up with identities.
    if (partials.size() < group.slots.size()) {
      partials.reserve(group.slots.size());
      for (size_t i = partials.size(); i < group.slots.size(); ++i)
        partials.push_back(partial_identity(slots_[static_cast<size_t>(group.slots[i])].kind));
    }
    for (size_t i = 0; i < group.slots.size(); ++i) {
      const MetricKind& kind = slots_[static_cast<size_t>(group.slots[i])].kind;
      absorb(partials[i], extract_measure(rec, kind, scratch));
      ++shards_[static_cast<size_t>(target)].update_calls;
    }
  }
  if (groups_.empty() && !counted && (only_shard == kAllShards || only_shard == 0))
    ++slice_of(0).record_count;
}

void SliceStore::seal_below(int64_t bound) { sealed_below_ = std::max(sealed_below_, bound); }

void SliceStore::seal_slice(int64_t index) { force_sealed_.insert(index); }

bool SliceStore::sealed(int64_t index) const {
  return index < sealed_below_ || force_sealed_.count(index) != 0;
}

std::vector<SliceStore::ScanSlice> SliceStore::scan(int64_t from, int64_t to) const {
  if (from > to) throw InvalidRange("inverted scan range");
  std::set<int64_t> present;
  for (const auto& shard : shards_) {
    for (auto it = shard.slices.lower_bound(from); it != shard.slices.end() && it->first < to; ++it)
      present.insert(it->first);
  }
  std::vector<ScanSlice> out;
  if (present.empty()) return out;
  for (int64_t idx = *present.begin(); idx < to; ++idx) {
    if (idx > *present.rbegin()) break;
    ScanSlice s;
    s.index = idx;
    s.present = present.count(idx) != 0;
    s.sealed = sealed(idx);
    s.record_count = s.present ? record_count(idx) : 0;
    out.push_back(s);
  }
  return out;
}

std::optional<std::pair<int64_t, int64_t>> SliceStore::extent() const {
  std::optional<std::pair<int64_t, int64_t>> ext;
  for (const auto& shard : shards_) {
    if (shard.slices.empty()) continue;
    int64_t lo = shard.slices.begin()->first;
    int64_t hi = shard.slices.rbegin()->first;
    if (!ext) ext = {lo, hi};
    else ext = {std::min(ext->first, lo), std::max(ext->second, hi)};
  }
  return ext;
}

SliceStore::KeyedPartials SliceStore::fold_range(int slot, int64_t from, int64_t to) const {
  if (from > to) throw InvalidRange("inverted fold range");
  const SlotDef& def = slots_[static_cast<size_t>(slot)];
  KeyedPartials acc;
  uint64_t reads = 0;

  // Group shard cursors by slice index so merges happen in time order.
  std::map<int64_t, std::vector<const Table*>> by_index;
  for (const auto& shard : shards_) {
    for (auto it = shard.slices.lower_bound(from); it != shard.slices.end() && it->first < to; ++it) {
      if (static_cast<size_t>(def.group) >= it->second.tables.size()) continue;
      const Table& t = it->second.tables[static_cast<size_t>(def.group)];
      if (!t.empty()) by_index[it->first].push_back(&t);
    }
  }
  for (const auto& [index, tables] : by_index) {
    for (const Table* table : tables) {
      for (const auto& [key, partials] : *table) {
        if (static_cast<size_t>(def.pos) >= partials.size()) continue;  // slot newer than this key
        auto [it, inserted] = acc.try_emplace(key);
        if (inserted) it->second = partials[static_cast<size_t>(def.pos)];
        else merge_into(it->second, partials[static_cast<size_t>(def.pos)]);
        ++reads;
      }
    }
  }
  partial_reads_.fetch_add(reads, std::memory_order_relaxed);
  return acc;
}

std::optional<PartialAggregate> SliceStore::fold_key_range(int slot, const DimensionKey& key,
                                                           int64_t from, int64_t to) const {
  if (from > to) throw InvalidRange("inverted fold range");
  const SlotDef& def = slots_[static_cast<size_t>(slot)];
  const Shard& shard = shards_[static_cast<size_t>(shard_of(key))];
  std::optional<PartialAggregate> acc;
  uint64_t reads = 0;
  for (auto it = shard.slices.lower_bound(from); it != shard.slices.end() && it->first < to; ++it) {
    if (static_cast<size_t>(def.group) >= it->second.tables.size()) continue;
    const Table& table = it->second.tables[static_cast<size_t>(def.group)];
    auto entry = table.find(key);
    if (entry == table.end() || static_cast<size_t>(def.pos) >= entry->second.size()) continue;
    const PartialAggregate& p = entry->second[static_cast<size_t>(def.pos)];
    if (!acc) acc = p;
    else merge_into(*acc, p);
    ++reads;
  }
  partial_reads_.fetch_add(reads, std::memory_order_relaxed);
  return acc;
}

std::vector<std::pair<DimensionKey, std::vector<SliceStore::SeriesPoint>>>
SliceStore::collect_series(int slot, int64_t from, int64_t to) const {
  if (from > to) throw InvalidRange("inverted series range");
  const SlotDef& def = slots_[static_cast<size_t>(slot)];

  std::map<int64_t, std::vector<const Table*>> by_index;
  for (const auto& shard : shards_) {
    for (auto it = shard.slices.lower_bound(from); it != shard.slices.end() && it->first < to; ++it) {
      if (static_cast<size_t>(def.group) >= it->second.tables.size()) continue;
      const Table& t = it->second.tables[static_cast<size_t>(def.group)];
      if (!t.empty()) by_index[it->first].push_back(&t);
    }
  }

  std::unordered_map<DimensionKey, std::vector<SeriesPoint>, DimensionKeyHash> series;
  for (const auto& [index, tables] : by_index) {
    for (const Table* table : tables) {
      for (const auto& [key, partials] : *table)
        if (static_cast<size_t>(def.pos) < partials.size())
          series[key].push_back(SeriesPoint{index, &partials[static_cast<size_t>(def.pos)]});
    }
  }

  std::vector<std::pair<DimensionKey, std::vector<SeriesPoint>>> out;
  out.reserve(series.size());
  for (auto& [key, points] : series) out.emplace_back(key, std::move(points));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

uint64_t SliceStore::update_calls() const {
  uint64_t total = 0;
  for (const auto& shard : shards_) total += shard.update_calls;
  return total;
}

uint64_t SliceStore::total_records() const {
  uint64_t total = 0;
  for (const auto& shard : shards_)
    for (const auto& [index, slice] : shard.slices) total += slice.record_count;
  return total;
}

uint64_t SliceStore::record_count(int64_t index) const {
  uint64_t total = 0;
  for (const auto& shard : shards_) {
    auto it = shard.slices.find(index);
    if (it != shard.slices.end()) total += it->second.record_count;
  }
  return total;
}

size_t SliceStore::approx_bytes() const {
  size_t bytes = sizeof(*this);
  for (const auto& shard : shards_) {
    for (const auto& [index, slice] : shard.slices) {
      bytes += 64;
      for (const auto& table : slice.tables) {
        bytes += table.bucket_count() * sizeof(void*);
        for (const auto& [key, partials] : table) {
          bytes += key.value.capacity() + 48;
          for (const auto& p : partials) bytes += approx_partial_bytes(p);
        }
      }
    }
  }
  return bytes;
}

DimensionKey SliceStore::key_for(const TransactionRecord& rec, int slot) const {
  std::string buf;
  build_key(rec, groups_[static_cast<size_t>(slots_[static_cast<size_t>(slot)].group)], buf);
  return DimensionKey{std::move(buf)};
}

void SliceStore::snapshot(const std::string& path) const {
  ByteWriter out;
  out.u8(kSnapshotMagic[0]);
  out.u8(kSnapshotMagic[1]);
  out.u8(kSnapshotMagic[2]);
  out.u8(kSnapshotMagic[3]);
  out.u8(kSnapshotMagic[4]);
  out.u8(kSnapshotMagic[5]);
  out.u32(kSnapshotVersion);
  out.i64(granularity_);
  out.i64(origin_);
  out.u32(static_cast<uint32_t>(shards_.size()));
  out.i64(sealed_below_);
  std::vector<int64_t> forced(force_sealed_.begin(), force_sealed_.end());
  std::sort(forced.begin(), forced.end());
  out.u32(static_cast<uint32_t>(forced.size()));
  for (int64_t idx : forced) out.i64(idx);

  out.u32(static_cast<uint32_t>(groups_.size()));
  for (const auto& g : groups_) {
    out.u32(static_cast<uint32_t>(g.fields.size()));
    for (const auto& f : g.fields) out.str(f);
  }
  out.u32(static_cast<uint32_t>(slots_.size()));
  for (const auto& s : slots_) {
    out.u8(static_cast<uint8_t>(s.kind.family));
    out.u8(static_cast<uint8_t>(s.kind.moment_order));
    out.u8(static_cast<uint8_t>(s.kind.direction));
    out.str(s.kind.measure_field);
    out.str(s.kind.second_field);
    out.u32(static_cast<uint32_t>(s.group));
    out.u32(static_cast<uint32_t>(s.pos));
  }

  for (const auto& shard : shards_) {
    const size_t len_pos = out.size();
    out.u64(0);  // patched with the section length below
    const size_t begin = out.size();
    out.u64(shard.update_calls);
    out.u32(static_cast<uint32_t>(shard.slices.size()));
    for (const auto& [index, slice] : shard.slices) {
      out.i64(index);
      out.u64(slice.record_count);
      out.u32(static_cast<uint32_t>(slice.tables.size()));
      for (const auto& table : slice.tables) {
        std::vector<const DimensionKey*> keys;
        keys.reserve(table.size());
        for (const auto& [key, partials] : table) keys.push_back(&key);
        std::sort(keys.begin(), keys.end(),
                  [](const DimensionKey* a, const DimensionKey* b) { return *a < *b; });
        out.u32(static_cast<uint32_t>(keys.size()));
        for (const DimensionKey* key : keys) {
          out.str(key->value);
          const auto& partials = table.at(*key);
          out.u32(static_cast<uint32_t>(partials.size()));
          for (const auto& p : partials) write_partial(out, p);
        }
      }
    }
    out.patch_u64(len_pos, out.size() - begin);
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  file.write(out.bytes().data(), static_cast<std::streamsize>(out.bytes().size()));
  if (!file) throw IoError("write failed on '" + path + "'");
}

SliceStore SliceStore::restore(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for reading");
  std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  ByteReader r(std::move(data));

  char magic[6];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0)
    throw SnapshotError("bad magic, not a snapshot file");
  const uint32_t version = r.u32();
  if (version != kSnapshotVersion)
    throw SnapshotError("unsupported snapshot version " + std::to_string(version));

  Config cfg;
  cfg.granularity = r.i64();
  cfg.origin = r.i64();
  const uint32_t shard_count = r.u32();
  if (shard_count == 0 || shard_count > 4096)
    throw SnapshotError("implausible shard count at byte " + std::to_string(r.pos()));
  cfg.shards = static_cast<int>(shard_count);
  SliceStore store(cfg);
  store.sealed_below_ = r.i64();
  const uint32_t n_forced = r.u32();
  for (uint32_t i = 0; i < n_forced; ++i) store.force_sealed_.insert(r.i64());

  const uint32_t n_groups = r.u32();
  for (uint32_t g = 0; g < n_groups; ++g) {
    KeyGroup group;
    const uint32_t n_fields = r.u32();
    for (uint32_t f = 0; f < n_fields; ++f) group.fields.push_back(r.str());
    store.groups_.push_back(std::move(group));
  }
  const uint32_t n_slots = r.u32();
  for (uint32_t s = 0; s < n_slots; ++s) {
    SlotDef def;
    def.kind.family = static_cast<MetricFamily>(r.u8());
    def.kind.moment_order = r.u8();
    def.kind.direction = static_cast<RunDirection>(r.u8());
    def.kind.measure_field = r.str();
    def.kind.second_field = r.str();
    def.group = static_cast<int>(r.u32());
    def.pos = static_cast<int>(r.u32());
    if (def.group < 0 || static_cast<size_t>(def.group) >= store.groups_.size())
      throw SnapshotError("slot references missing key group at byte " + std::to_string(r.pos()));
    store.groups_[static_cast<size_t>(def.group)].slots.push_back(static_cast<int>(s));
    store.slots_.push_back(std::move(def));
  }

  for (auto& shard : store.shards_) {
    const uint64_t section_len = r.u64();
    const size_t begin = r.pos();
    shard.update_calls = r.u64();
    const uint32_t n_slices = r.u32();
    for (uint32_t i = 0; i < n_slices; ++i) {
      const int64_t index = r.i64();
      ShardSlice slice;
      slice.record_count = r.u64();
      const uint32_t n_tables = r.u32();
      if (n_tables > store.groups_.size())
        throw SnapshotError("slice has more tables than key groups at byte " + std::to_string(r.pos()));
      slice.tables.resize(n_tables);
      for (uint32_t g = 0; g < n_tables; ++g) {
        const uint32_t n_keys = r.u32();
        const size_t n_group_slots = store.groups_[g].slots.size();
        for (uint32_t k = 0; k < n_keys; ++k) {
          DimensionKey key{r.str()};
          const uint32_t n_partials = r.u32();
          if (n_partials > n_group_slots)
            throw SnapshotError("key has more partials than slots at byte " + std::to_string(r.pos()));
          std::vector<PartialAggregate> partials;
          partials.reserve(n_partials);
          for (uint32_t p = 0; p < n_partials; ++p) partials.push_back(read_partial(r));
          slice.tables[g].emplace(std::move(key), std::move(partials));
        }
      }
      shard.slices.emplace(index, std::move(slice));
    }
    if (r.pos() - begin != section_len)
      throw SnapshotError("shard section length mismatch at byte " + std::to_string(r.pos()));
  }
  if (!r.exhausted())
    throw SnapshotError("trailing bytes after snapshot at byte " + std::to_string(r.pos()));
  return store;
}

}  // namespace scube
