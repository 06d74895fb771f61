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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "scube/bench.hpp"
#include "scube/datagen.hpp"

using namespace scube;

namespace {

std::vector<TransactionRecord> tiny_dataset() {
  GenConfig cfg;
  cfg.days = 3;
  cfg.records_per_day = 500;
  cfg.n_accounts = 20;
  cfg.n_merchants = 5;
  cfg.n_cities = 10;
  cfg.seed = 8;
  return generate_vector(cfg);
}

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "scube_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("window planning clips to the data span") {
  const auto records = tiny_dataset();
  auto daily = plan_window_bounds(records, 0, kDay, kDay);
  REQUIRE(daily.size() == 3);  // 3 days of data, one window end per day
  CHECK(daily[0].start == 0);
  CHECK(daily[0].end == kDay);
  CHECK(daily[2].end == 3 * kDay);

  auto wide = plan_window_bounds(records, 0, kDay, 2 * kDay);
  REQUIRE(wide.size() == 3);
  CHECK(wide[0].start == 0);  // clipped to the data start
  CHECK(wide[0].end == kDay);
  CHECK(wide[2].start == kDay);
  CHECK(plan_window_bounds({}, 0, kDay, kDay).empty());
}

TEST_CASE("engine and baseline agree on the default metrics") {
  const auto records = tiny_dataset();
  BenchPlan plan = BenchPlan::defaults();
  plan.window_sizes = {kDay, 2 * kDay};
  plan.shards = 2;

  const BenchReport report = run_bench(plan, records);
  REQUIRE(report.rows.size() == 8);  // 2 queries x 2 windows x 2 modes
  CHECK(report.all_equal);
  for (const auto& row : report.rows) {
    CHECK(row.windows == 3);
    if (row.mode == "baseline") {
      CHECK(row.equal == 1);
      CHECK(row.flag.empty());
    } else {
      CHECK(row.equal == -1);
      CHECK(row.seconds >= 0.0);
    }
  }
}

TEST_CASE("engine-only mode produces no equivalence verdicts") {
  const auto records = tiny_dataset();
  BenchPlan plan = BenchPlan::defaults();
  plan.window_sizes = {kDay};
  plan.mode = BenchMode::Engine;
  const BenchReport report = run_bench(plan, records);
  REQUIRE(report.rows.size() == 2);
  for (const auto& row : report.rows) CHECK(row.equal == -1);
  CHECK(report.all_equal);
}

TEST_CASE("a tiny memory cap exhausts the distinct baseline") {
  const auto records = tiny_dataset();
  BenchPlan plan = BenchPlan::defaults();
  plan.window_sizes = {2 * kDay};
  plan.baseline_memory_cap = 64;  // bytes: the city lists cannot fit
  const BenchReport report = run_bench(plan, records);

  bool saw_exhausted = false;
  for (const auto& row : report.rows) {
    if (row.mode == "baseline" && row.query == "distinct_city_by_acct") {
      CHECK(row.flag == "exhausted");
      CHECK(std::isnan(row.seconds));
      CHECK(row.equal == -1);
      saw_exhausted = true;
    }
  }
  CHECK(saw_exhausted);
  CHECK(report.all_equal);  // exhaustion is reported, not failed
}

TEST_CASE("compare_and_emit writes the report and surfaces failures") {
  BenchReport report;
  BenchRow good;
  good.query = "avg_amt_by_acct";
  good.window_size = kDay;
  good.mode = "baseline";
  good.seconds = 0.5;
  good.windows = 3;
  good.equal = 1;
  report.rows.push_back(good);

  const std::string path = temp_path("report.csv");
  CHECK(compare_and_emit(report, path));

  // Injected off-by-one verdict must flip the exit decision.
  BenchRow bad = good;
  bad.equal = 0;
  bad.flag = "mismatch in window [0,86400000)";
  report.rows.push_back(bad);
  report.all_equal = false;
  CHECK(!compare_and_emit(report, path));

  std::ifstream in(path);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header.rfind("query,windowSize,mode,seconds,windows,equal", 0) == 0);
  std::string line1, line2;
  REQUIRE(std::getline(in, line1));
  REQUIRE(std::getline(in, line2));
  CHECK(line1.find("true") != std::string::npos);
  CHECK(line2.find("false") != std::string::npos);
}

TEST_CASE("plan validation rejects bad shapes") {
  BenchPlan plan = BenchPlan::defaults();
  plan.window_sizes = {kDay + kHour};  // not a multiple of the step
  CHECK_THROWS_AS(plan.validate(), InvalidSpec);
  plan = BenchPlan::defaults();
  plan.repetitions = 0;
  CHECK_THROWS_AS(plan.validate(), InvalidSpec);
  plan = BenchPlan::defaults();
  plan.queries.clear();
  CHECK_THROWS_AS(plan.validate(), InvalidSpec);
}

TEST_CASE("throughput measurement reports positive rates") {
  const auto records = tiny_dataset();
  const int shard_counts[] = {1, 2};
  auto rows = run_throughput(records, shard_counts, 2000);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.records == records.size());
    CHECK(row.write_tps > 0);
    CHECK(row.read_tps > 0);
  }
}
