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
#include <string_view>
#include <vector>

#include "scube/errors.hpp"
#include "scube/time.hpp"

namespace scube {

enum class BizCode : uint8_t { MOB, C3, EXP, DIN, HOT, OTH };
enum class Channel : uint8_t { AND, IOS, WEB, WAP };

std::string_view to_string(BizCode c);
std::string_view to_string(Channel c);
BizCode parse_biz_code(std::string_view s);  // throws ParseError
Channel parse_channel(std::string_view s);   // throws ParseError

/// One simulated transaction. Field names in CSV form are
/// transTime,acctId,merId,transAmt,city,hizCode,chnl,stat.
struct TransactionRecord {
  Timestamp trans_time = 0;  // epoch ms
  std::string acct_id;
  std::string mer_id;
  int64_t trans_amt = 0;  // minor currency units
  std::string city;
  BizCode hiz_code = BizCode::OTH;
  Channel chnl = Channel::AND;
  uint8_t stat = 0;  // 0 success, 1 not sufficient funds

  bool operator==(const TransactionRecord&) const = default;
};

enum class FieldType : uint8_t { Integer, Text };

/// View of one record field, either numeric or textual.
struct FieldRef {
  FieldType type;
  int64_t num = 0;
  std::string_view text;
};

bool schema_has_field(std::string_view name);
FieldType schema_field_type(std::string_view name);  // throws InvalidSpec on unknown field
FieldRef record_field(const TransactionRecord& rec, std::string_view name);

inline constexpr std::string_view kCsvHeader = "transTime,acctId,merId,transAmt,city,hizCode,chnl,stat";

/// Appends one record as a CSV row (no trailing newline handling; the caller
/// adds '\n').
void format_csv_row(const TransactionRecord& rec, std::string& out);

/// Parses one CSV data row. Throws ParseError (with the given line number) on
/// wrong column count or bad field values.
TransactionRecord parse_csv_row(std::string_view row, size_t line_no);

struct CsvReadStats {
  uint64_t records = 0;
  uint64_t parse_errors = 0;
};

/// Streams records out of a CSV file. In strict mode the first bad row
/// throws; otherwise bad rows are counted and skipped. A missing or
/// malformed header always throws.
CsvReadStats read_csv(const std::string& path,
                      const std::function<void(const TransactionRecord&)>& sink,
                      bool strict = false);

/// Writes a header plus all records. Returns bytes written.
uint64_t write_csv(const std::string& path, const std::vector<TransactionRecord>& records);

}  // namespace scube
