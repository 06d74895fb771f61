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

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scube/bench.hpp"
#include "scube/datagen.hpp"
#include "scube/engine.hpp"
#include "scube/query_config.hpp"
#include "scube/record.hpp"

namespace {

using namespace scube;

// Exit statuses scripts can rely on.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitEquivalence = 3;
constexpr int kExitInternal = 4;

int log_level() {
  const char* env = std::getenv("SCUBE_LOG");
  if (env == nullptr) return 0;
  const std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[scube] " << msg << "\n";
}

std::string format_value(double v, bool integer_valued) {
  char buf[64];
  if (integer_valued) {
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(std::llround(v)));
    return buf;
  }
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// Collects every emission, then writes them in a stable order so identical
// inputs produce byte-identical files.
class ResultSink {
 public:
  void add_window(const WindowResult& r, bool integer_valued) {
    for (const auto& [key, value] : r.values) {
      rows_.push_back(Row{r.query_id, r.window_start, r.window_end, key.value,
                          format_value(value, integer_valued), seq_++});
    }
  }

  void add_match(const CompletedMatch& m) {
    std::string ids;
    for (size_t i = 0; i < m.event_ids.size(); ++i) {
      if (i != 0) ids.push_back(';');
      ids += std::to_string(m.event_ids[i]);
    }
    rows_.push_back(Row{m.pattern_id, m.first_time, m.last_time, m.key.value, ids, seq_++});
  }

  size_t size() const { return rows_.size(); }

  void write(const std::string& path) {
    std::sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) {
      return std::tie(a.query, a.key, a.start, a.end, a.seq) <
             std::tie(b.query, b.key, b.start, b.end, b.seq);
    });
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "queryId,windowStart,windowEnd,key,value\n";
    for (const Row& r : rows_)
      out << r.query << ',' << r.start << ',' << r.end << ',' << r.key << ',' << r.value << '\n';
    if (!out) throw IoError("write failed on '" + path + "'");
  }

 private:
  struct Row {
    std::string query;
    Timestamp start, end;
    std::string key;
    std::string value;
    uint64_t seq;
  };
  std::vector<Row> rows_;
  uint64_t seq_ = 0;
};

struct GenerateArgs {
  GenConfig cfg;
  std::string out;
};

int cmd_generate(const GenerateArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  const uint64_t bytes = generate_csv(args.cfg, args.out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("generated records=%llu bytes=%llu seconds=%.2f path=%s\n",
              static_cast<unsigned long long>(args.cfg.total_records()),
              static_cast<unsigned long long>(bytes), secs, args.out.c_str());
  return kExitOk;
}

struct RunArgs {
  std::string data;
  std::string queries;
  std::string out;
  int shards = 0;
  std::string lateness = "0ms";
  bool strict = false;
};

int cmd_run(const RunArgs& args) {
  ParsedQueryConfig config;
  try {
    config = parse_query_config(args.queries);
  } catch (const Error& e) {
    std::cerr << "bad query config: " << e.what() << "\n";
    return kExitUsage;
  }

  EngineConfig cfg;
  cfg.shards = args.shards;
  cfg.allowed_lateness = parse_duration(args.lateness, /*allow_zero=*/true);
  CubeEngine engine(cfg);
  for (auto& q : config.queries) engine.register_query(std::move(q));
  for (auto& s : config.sequences) engine.register_sequence(std::move(s));

  ResultSink sink;
  engine.on_match([&](const CompletedMatch& m) { sink.add_match(m); });

  // Per-query value formatting, fixed up front.
  std::vector<std::pair<std::string, bool>> integer_valued;
  for (const auto& id : engine.query_ids())
    integer_valued.emplace_back(id, engine.query(id).metric.integer_valued());
  auto is_integer = [&](const std::string& id) {
    for (const auto& [qid, integral] : integer_valued)
      if (qid == id) return integral;
    return false;
  };

  bool any_clock = false;
  for (const auto& id : engine.query_ids())
    if (engine.query(id).trigger.kind == TriggerKind::ClockDriven) any_clock = true;

  CsvReadStats stats;
  try {
    stats = read_csv(
        args.data,
        [&](const TransactionRecord& rec) {
          for (const auto& r : engine.ingest(rec)) sink.add_window(r, is_integer(r.query_id));
          if (any_clock)  // the batch clock follows the watermark (monotone under late data)
            for (const auto& r : engine.advance_clock(engine.watermark()))
              sink.add_window(r, is_integer(r.query_id));
        },
        args.strict);
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }

  for (const auto& r : engine.finish()) sink.add_window(r, is_integer(r.query_id));
  sink.write(args.out);

  const EngineCounters c = engine.counters();
  std::printf("ingested=%llu dropped_late=%llu parse_errors=%llu\n",
              static_cast<unsigned long long>(c.ingested),
              static_cast<unsigned long long>(c.dropped_late),
              static_cast<unsigned long long>(stats.parse_errors));
  std::printf("partial_updates=%llu partial_reads=%llu sequence_matches=%llu\n",
              static_cast<unsigned long long>(c.update_calls),
              static_cast<unsigned long long>(c.partial_reads),
              static_cast<unsigned long long>(c.sequence_matches));
  if (engine.frozen()) {
    std::printf("queries=%zu metric_slots=%d granularity=%s result_rows=%zu\n",
                engine.query_ids().size(), engine.store().slot_count(),
                format_duration(engine.granularity()).c_str(), sink.size());
  }
  return kExitOk;
}

struct BenchArgs {
  std::string data;
  std::string out = "bench_report.csv";
  std::string windows = "1d,90d";
  std::string step = "1d";
  std::string mode = "both";
  int shards = 0;
  int repetitions = 1;
  uint64_t mem_cap = 2ull << 30;
  bool throughput = false;
};

int cmd_bench(const BenchArgs& args) {
  BenchPlan plan = BenchPlan::defaults();
  plan.window_sizes.clear();
  size_t start = 0;
  const std::string& wins = args.windows;
  for (size_t i = 0; i <= wins.size(); ++i) {
    if (i == wins.size() || wins[i] == ',') {
      if (i > start) plan.window_sizes.push_back(parse_duration(wins.substr(start, i - start)));
      start = i + 1;
    }
  }
  plan.step = parse_duration(args.step);
  plan.shards = args.shards;
  plan.repetitions = args.repetitions;
  plan.baseline_memory_cap = args.mem_cap;
  if (args.mode == "engine") plan.mode = BenchMode::Engine;
  else if (args.mode == "baseline") plan.mode = BenchMode::Baseline;
  else if (args.mode == "both") plan.mode = BenchMode::Both;
  else throw InvalidSpec("unknown mode '" + args.mode + "'");

  std::vector<TransactionRecord> records;
  try {
    read_csv(args.data, [&](const TransactionRecord& rec) { records.push_back(rec); });
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.trans_time < b.trans_time; });
  log_info("loaded " + std::to_string(records.size()) + " records");

  const BenchReport report = run_bench(plan, records);
  const bool all_equal = compare_and_emit(report, args.out);
  for (const auto& row : report.rows) {
    std::printf("%-24s window=%-5s mode=%-8s seconds=%8.3f windows=%llu equal=%s%s%s\n",
                row.query.c_str(), format_duration(row.window_size).c_str(), row.mode.c_str(),
                row.seconds, static_cast<unsigned long long>(row.windows),
                row.equal < 0 ? "n/a" : (row.equal == 1 ? "true" : "false"),
                row.flag.empty() ? "" : " flag=", row.flag.c_str());
  }
  std::printf("report=%s\n", args.out.c_str());

  if (args.throughput) {
    const int shard_counts[] = {1, 2, 4};
    auto rows = run_throughput(records, shard_counts);
    for (const auto& r : rows)
      std::printf("throughput shards=%d records=%llu write_tps=%.0f read_tps=%.0f\n", r.shards,
                  static_cast<unsigned long long>(r.records), r.write_tps, r.read_tps);
  }
  return all_equal ? kExitOk : kExitEquivalence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stream cube: sliced incremental window aggregation over transaction streams"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write a simulated transaction CSV");
  generate->add_option("--days", gen.cfg.days, "days of data")->check(CLI::PositiveNumber);
  generate->add_option("--per-day", gen.cfg.records_per_day, "records per day")->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.cfg.seed, "rng seed");
  generate->add_option("--accounts", gen.cfg.n_accounts, "distinct accounts")->check(CLI::PositiveNumber);
  generate->add_option("--merchants", gen.cfg.n_merchants, "distinct merchants")->check(CLI::PositiveNumber);
  generate->add_option("--cities", gen.cfg.n_cities, "distinct cities")->check(CLI::PositiveNumber);
  generate->add_option("--amount-min", gen.cfg.amount_min, "minimum amount");
  generate->add_option("--amount-max", gen.cfg.amount_max, "maximum amount");
  generate->add_option("--start", gen.cfg.start_date, "epoch ms of day 0");
  generate->add_option("--out", gen.out, "output CSV path")->required();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "ingest a dataset and emit query results");
  run_cmd->add_option("--data", run.data, "input CSV")->required();
  run_cmd->add_option("--queries", run.queries, "query config file")->required();
  run_cmd->add_option("--out", run.out, "results CSV")->required();
  run_cmd->add_option("--shards", run.shards, "state shards (0 = cores)");
  run_cmd->add_option("--lateness", run.lateness, "allowed lateness, e.g. 1h");
  run_cmd->add_flag("--strict", run.strict, "fail on the first bad data row");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "engine vs naive baseline comparison");
  bench_cmd->add_option("--data", bench.data, "input CSV")->required();
  bench_cmd->add_option("--out", bench.out, "report CSV path");
  bench_cmd->add_option("--windows", bench.windows, "window sizes, e.g. 1d,90d");
  bench_cmd->add_option("--step", bench.step, "window step");
  bench_cmd->add_option("--mode", bench.mode, "engine | baseline | both");
  bench_cmd->add_option("--shards", bench.shards, "engine shards (0 = cores)");
  bench_cmd->add_option("--reps", bench.repetitions, "repetitions, best-of")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--mem-cap", bench.mem_cap, "baseline buffer cap in bytes");
  bench_cmd->add_flag("--throughput", bench.throughput, "also measure ingest/lookup throughput");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen);
    if (run_cmd->parsed()) return cmd_run(run);
    if (bench_cmd->parsed()) return cmd_bench(bench);
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidSpec& e) {
    std::cerr << "invalid spec: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GranularityMismatch& e) {
    std::cerr << "granularity mismatch: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DuplicateQuery& e) {
    std::cerr << "duplicate query: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PatternError& e) {
    std::cerr << "pattern error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
