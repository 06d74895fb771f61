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

#include "scube/record.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>

namespace scube {

namespace {

constexpr std::array<std::string_view, 6> kBizNames = {"MOB", "3C", "EXP", "DIN", "HOT", "OTH"};
constexpr std::array<std::string_view, 4> kChnlNames = {"AND", "IOS", "WEB", "WAP"};

int64_t parse_int_field(std::string_view s, const char* what, size_t line_no) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(std::string("bad ") + what + " '" + std::string(s) + "'", line_no);
  return v;
}

}  // namespace

std::string_view to_string(BizCode c) { return kBizNames[static_cast<size_t>(c)]; }
std::string_view to_string(Channel c) { return kChnlNames[static_cast<size_t>(c)]; }

BizCode parse_biz_code(std::string_view s) {
  for (size_t i = 0; i < kBizNames.size(); ++i)
    if (s == kBizNames[i]) return static_cast<BizCode>(i);
  throw ParseError("unknown hizCode '" + std::string(s) + "'");
}

Channel parse_channel(std::string_view s) {
  for (size_t i = 0; i < kChnlNames.size(); ++i)
    if (s == kChnlNames[i]) return static_cast<Channel>(i);
  throw ParseError("unknown chnl '" + std::string(s) + "'");
}

bool schema_has_field(std::string_view name) {
  return name == "transTime" || name == "acctId" || name == "merId" || name == "transAmt" ||
         name == "city" || name == "hizCode" || name == "chnl" || name == "stat";
}

FieldType schema_field_type(std::string_view name) {
  if (name == "transTime" || name == "transAmt" || name == "stat") return FieldType::Integer;
  if (schema_has_field(name)) return FieldType::Text;
  throw InvalidSpec("unknown record field '" + std::string(name) + "'");
}

FieldRef record_field(const TransactionRecord& rec, std::string_view name) {
  if (name == "transTime") return {FieldType::Integer, rec.trans_time, {}};
  if (name == "transAmt") return {FieldType::Integer, rec.trans_amt, {}};
  if (name == "stat") return {FieldType::Integer, rec.stat, {}};
  if (name == "acctId") return {FieldType::Text, 0, rec.acct_id};
  if (name == "merId") return {FieldType::Text, 0, rec.mer_id};
  if (name == "city") return {FieldType::Text, 0, rec.city};
  if (name == "hizCode") return {FieldType::Text, 0, to_string(rec.hiz_code)};
  if (name == "chnl") return {FieldType::Text, 0, to_string(rec.chnl)};
  throw InvalidSpec("unknown record field '" + std::string(name) + "'");
}

void format_csv_row(const TransactionRecord& rec, std::string& out) {
  char buf[32];
  auto append_int = [&](int64_t v) {
    int n = std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    out.append(buf, static_cast<size_t>(n));
  };
  append_int(rec.trans_time);
  out.push_back(',');
  out.append(rec.acct_id);
  out.push_back(',');
  out.append(rec.mer_id);
  out.push_back(',');
  append_int(rec.trans_amt);
  out.push_back(',');
  out.append(rec.city);
  out.push_back(',');
  out.append(to_string(rec.hiz_code));
  out.push_back(',');
  out.append(to_string(rec.chnl));
  out.push_back(',');
  append_int(rec.stat);
}

TransactionRecord parse_csv_row(std::string_view row, size_t line_no) {
  std::array<std::string_view, 8> cols;
  size_t n = 0;
  size_t start = 0;
  for (size_t i = 0; i <= row.size(); ++i) {
    if (i == row.size() || row[i] == ',') {
      if (n == cols.size())
        throw ParseError("expected 8 columns, found more", line_no);
      cols[n++] = row.substr(start, i - start);
      start = i + 1;
    }
  }
  if (n != cols.size())
    throw ParseError("expected 8 columns, found " + std::to_string(n), line_no);

  TransactionRecord rec;
  rec.trans_time = parse_int_field(cols[0], "transTime", line_no);
  rec.acct_id = std::string(cols[1]);
  rec.mer_id = std::string(cols[2]);
  rec.trans_amt = parse_int_field(cols[3], "transAmt", line_no);
  rec.city = std::string(cols[4]);
  try {
    rec.hiz_code = parse_biz_code(cols[5]);
    rec.chnl = parse_channel(cols[6]);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), line_no);
  }
  int64_t stat = parse_int_field(cols[7], "stat", line_no);
  if (stat != 0 && stat != 1) throw ParseError("stat must be 0 or 1", line_no);
  rec.stat = static_cast<uint8_t>(stat);
  return rec;
}

CsvReadStats read_csv(const std::string& path,
                      const std::function<void(const TransactionRecord&)>& sink,
                      bool strict) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line)) return {};  // zero-byte file, empty stream
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader)
    throw ParseError("unexpected header '" + line + "'", 1);

  CsvReadStats stats;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      TransactionRecord rec = parse_csv_row(line, line_no);
      ++stats.records;
      sink(rec);
    } catch (const ParseError&) {
      if (strict) throw;
      ++stats.parse_errors;
    }
  }
  return stats;
}

uint64_t write_csv(const std::string& path, const std::vector<TransactionRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  std::string buf;
  buf.reserve(1 << 20);
  buf.append(kCsvHeader);
  buf.push_back('\n');
  uint64_t bytes = 0;
  for (const auto& rec : records) {
    format_csv_row(rec, buf);
    buf.push_back('\n');
    if (buf.size() > (1 << 20) - 256) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      bytes += buf.size();
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  bytes += buf.size();
  if (!out) throw IoError("write failed on '" + path + "'");
  return bytes;
}

}  // namespace scube
