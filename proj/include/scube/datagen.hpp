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
#include <functional>
#include <string>
#include <vector>

#include "scube/record.hpp"
#include "scube/time.hpp"

namespace scube {

/// Simulation parameters. Timestamps within each day, account, merchant,
/// city and amount draws are all Gaussian with the mean at the range center
/// and sigma = range/6 (so +-3 sigma spans the range), clamped to the range;
/// hizCode/chnl/stat are uniform. Same seed, same bytes.
struct GenConfig {
  int days = 150;
  int records_per_day = 100000;
  int n_accounts = 10000;
  int n_merchants = 1000;
  int n_cities = 500;
  int64_t amount_min = 0;
  int64_t amount_max = 1000000;
  uint64_t seed = 1;
  Timestamp start_date = 0;  // epoch ms, midnight of day 0
  Duration time_of_day_sigma = 4 * kHour;

  void validate() const;  // throws ConfigError
  uint64_t total_records() const { return static_cast<uint64_t>(days) * static_cast<uint64_t>(records_per_day); }
};

/// Streams days*records_per_day simulated transactions in nondecreasing
/// transTime order. Returns the record count.
uint64_t generate(const GenConfig& cfg, const std::function<void(const TransactionRecord&)>& sink);

/// Convenience: materialize the whole stream.
std::vector<TransactionRecord> generate_vector(const GenConfig& cfg);

/// Generates straight to a CSV file. Returns bytes written.
uint64_t generate_csv(const GenConfig& cfg, const std::string& path);

}  // namespace scube
