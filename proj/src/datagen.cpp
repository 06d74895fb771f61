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

#include "scube/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "scube/errors.hpp"

namespace scube {

namespace {

// mt19937_64 is bit-exact across platforms; the distributions on top are
// hand-rolled because the standard library's are not.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  double next_unit() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double gaussian(double mean, double sigma) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + sigma * spare_;
    }
    // Box-Muller on uniforms from (0, 1].
    const double u1 = 1.0 - next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return mean + sigma * r * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

int64_t clamped_gaussian_int(Rng& rng, double mean, double sigma, int64_t lo, int64_t hi) {
  const double v = rng.gaussian(mean, sigma);
  const auto r = static_cast<int64_t>(std::llround(v));
  return std::clamp(r, lo, hi);
}

int id_width(int count) {
  int width = 1;
  for (int v = count - 1; v >= 10; v /= 10) ++width;
  return std::clamp(width, 4, 12);
}

}  // namespace

void GenConfig::validate() const {
  if (days <= 0) throw ConfigError("days must be positive");
  if (records_per_day <= 0) throw ConfigError("records per day must be positive");
  if (n_accounts <= 0 || n_merchants <= 0 || n_cities <= 0)
    throw ConfigError("account/merchant/city counts must be positive");
  if (amount_min > amount_max) throw ConfigError("empty amount range");
  if (time_of_day_sigma <= 0) throw ConfigError("time-of-day sigma must be positive");
}

uint64_t generate(const GenConfig& cfg, const std::function<void(const TransactionRecord&)>& sink) {
  cfg.validate();
  Rng rng(cfg.seed);

  const int acct_width = id_width(cfg.n_accounts);
  const int mer_width = id_width(cfg.n_merchants);
  const int city_width = id_width(cfg.n_cities);
  char idbuf[40];

  std::vector<Timestamp> times(static_cast<size_t>(cfg.records_per_day));
  uint64_t emitted = 0;
  for (int day = 0; day < cfg.days; ++day) {
    const Timestamp day_start = cfg.start_date + static_cast<Timestamp>(day) * kDay;
    // Times first, then sort within the day: the stream leaves here ordered.
    for (auto& t : times) {
      const double offset = rng.gaussian(static_cast<double>(kDay) / 2.0,
                                         static_cast<double>(cfg.time_of_day_sigma));
      const auto ms = std::clamp<int64_t>(static_cast<int64_t>(std::llround(offset)), 0, kDay - 1);
      t = day_start + ms;
    }
    std::sort(times.begin(), times.end());

    TransactionRecord rec;
    for (int i = 0; i < cfg.records_per_day; ++i) {
      rec.trans_time = times[static_cast<size_t>(i)];

      const int64_t acct = clamped_gaussian_int(rng, cfg.n_accounts / 2.0, cfg.n_accounts / 6.0, 0,
                                                cfg.n_accounts - 1);
      std::snprintf(idbuf, sizeof(idbuf), "A%0*lld", acct_width, static_cast<long long>(acct));
      rec.acct_id = idbuf;

      const int64_t mer = clamped_gaussian_int(rng, cfg.n_merchants / 2.0, cfg.n_merchants / 6.0, 0,
                                               cfg.n_merchants - 1);
      std::snprintf(idbuf, sizeof(idbuf), "M%0*lld", mer_width, static_cast<long long>(mer));
      rec.mer_id = idbuf;

      const double amt_mid = (static_cast<double>(cfg.amount_min) + static_cast<double>(cfg.amount_max)) / 2.0;
      const double amt_sigma = (static_cast<double>(cfg.amount_max) - static_cast<double>(cfg.amount_min)) / 6.0;
      rec.trans_amt = amt_sigma > 0
                          ? clamped_gaussian_int(rng, amt_mid, amt_sigma, cfg.amount_min, cfg.amount_max)
                          : cfg.amount_min;

      const int64_t city = clamped_gaussian_int(rng, cfg.n_cities / 2.0, cfg.n_cities / 6.0, 0,
                                                cfg.n_cities - 1);
      std::snprintf(idbuf, sizeof(idbuf), "C%0*lld", city_width, static_cast<long long>(city));
      rec.city = idbuf;

      rec.hiz_code = static_cast<BizCode>(rng.next_u64() % 6);
      rec.chnl = static_cast<Channel>(rng.next_u64() % 4);
      rec.stat = static_cast<uint8_t>(rng.next_u64() % 2);

      sink(rec);
      ++emitted;
    }
  }
  return emitted;
}

std::vector<TransactionRecord> generate_vector(const GenConfig& cfg) {
  std::vector<TransactionRecord> out;
  out.reserve(cfg.total_records());
  generate(cfg, [&](const TransactionRecord& rec) { out.push_back(rec); });
  return out;
}

uint64_t generate_csv(const GenConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  std::string buf;
  buf.reserve(1 << 20);
  buf.append(kCsvHeader);
  buf.push_back('\n');
  uint64_t bytes = 0;
  generate(cfg, [&](const TransactionRecord& rec) {
    format_csv_row(rec, buf);
    buf.push_back('\n');
    if (buf.size() > (1 << 20) - 256) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      bytes += buf.size();
      buf.clear();
    }
  });
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  bytes += buf.size();
  if (!out) throw IoError("write failed on '" + path + "'");
  return bytes;
}

}  // namespace scube
