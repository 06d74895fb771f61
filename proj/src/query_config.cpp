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

#include "scube/query_config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace scube {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::vector<std::string_view> tokens_of(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])) != 0) ++i;
    size_t start = i;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])) == 0) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// key=value pairs; the value keeps any further '=' (predicates carry them).
std::map<std::string, std::string> keyvals(const std::vector<std::string_view>& tokens,
                                           size_t from) {
  std::map<std::string, std::string> kv;
  for (size_t i = from; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw ParseError("expected key=value, got '" + std::string(tokens[i]) + "'");
    kv[std::string(tokens[i].substr(0, eq))] = std::string(tokens[i].substr(eq + 1));
  }
  return kv;
}

std::string take(std::map<std::string, std::string>& kv, const std::string& key,
                 bool required = true) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (required) throw ParseError("missing '" + key + "='");
    return {};
  }
  std::string v = std::move(it->second);
  kv.erase(it);
  return v;
}

void reject_leftovers(const std::map<std::string, std::string>& kv) {
  if (!kv.empty()) throw ParseError("unknown key '" + kv.begin()->first + "='");
}

MetricKind parse_kind(const std::string& token, std::map<std::string, std::string>& kv) {
  auto field = [&] { return take(kv, "field"); };
  if (token == "count") return metric_count();
  if (token == "sum") return metric_sum(field());
  if (token == "avg") return metric_avg(field());
  if (token == "min") return metric_min(field());
  if (token == "max") return metric_max(field());
  if (token == "variance" || token == "var") return metric_variance(field());
  if (token == "stddev") return metric_stddev(field());
  if (token == "cov" || token == "covariance") {
    std::string x = field();
    return metric_covariance(std::move(x), take(kv, "field2"));
  }
  if (token == "distinct") return metric_distinct(field());
  if (token == "run_inc") return metric_run(field(), RunDirection::Increasing);
  if (token == "run_dec") return metric_run(field(), RunDirection::Decreasing);
  if (token.rfind("moment:", 0) == 0) {
    int k = 0;
    const std::string_view order(token.c_str() + 7);
    auto [p, ec] = std::from_chars(order.data(), order.data() + order.size(), k);
    if (ec != std::errc{} || p != order.data() + order.size())
      throw ParseError("bad moment order in '" + token + "'");
    return metric_central_moment(field(), k);
  }
  throw ParseError("unknown metric kind '" + token + "'");
}

EventPredicate parse_predicate(std::string_view text) {
  static constexpr std::pair<std::string_view, CmpOp> ops[] = {
      {"<=", CmpOp::Le}, {">=", CmpOp::Ge}, {"!=", CmpOp::Ne},
      {"<", CmpOp::Lt},  {">", CmpOp::Gt},  {"=", CmpOp::Eq},
  };
  for (const auto& [sym, op] : ops) {
    const auto pos = text.find(sym);
    if (pos == std::string_view::npos || pos == 0) continue;
    EventPredicate pred;
    pred.field = std::string(text.substr(0, pos));
    pred.op = op;
    const std::string_view value = text.substr(pos + sym.size());
    if (value.empty()) throw ParseError("predicate '" + std::string(text) + "' has no value");
    if (!schema_has_field(pred.field))
      throw ParseError("predicate on unknown field '" + pred.field + "'");
    pred.numeric = schema_field_type(pred.field) == FieldType::Integer;
    if (pred.numeric) {
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), pred.num_value);
      if (ec != std::errc{} || p != value.data() + value.size())
        throw ParseError("bad numeric value in predicate '" + std::string(text) + "'");
    } else {
      pred.text_value = std::string(value);
    }
    return pred;
  }
  throw ParseError("cannot parse predicate '" + std::string(text) + "'");
}

std::vector<std::string> parse_group_by(const std::string& text) {
  std::vector<std::string> out;
  for (auto f : split(text, ',')) {
    if (f.empty()) throw ParseError("empty group_by field");
    out.emplace_back(f);
  }
  return out;
}

void parse_line(std::string_view line, size_t line_no, ParsedQueryConfig& out) {
  auto tokens = tokens_of(line);
  if (tokens.empty()) return;

  if (tokens[0] == "sequence") {
    auto kv = keyvals(tokens, 1);
    SequencePattern pat;
    pat.id = take(kv, "id", false);
    if (pat.id.empty()) pat.id = "seq" + std::to_string(line_no);
    const std::string steps_text = take(kv, "steps");
    for (auto step_text : split(steps_text, ';')) {
      PatternStep step;
      for (auto pred_text : split(step_text, '&')) step.push_back(parse_predicate(pred_text));
      pat.steps.push_back(std::move(step));
    }
    pat.within = parse_duration(take(kv, "within"));
    pat.group_by = parse_group_by(take(kv, "group_by"));
    reject_leftovers(kv);
    SequenceMatcher::compile(pat);  // validate now so the error carries the line
    out.sequences.push_back(std::move(pat));
    return;
  }

  auto kv = keyvals(tokens, 0);
  QuerySpec spec;
  const std::string kind_token = take(kv, "metric");
  spec.metric = parse_kind(kind_token, kv);
  spec.group_by = parse_group_by(take(kv, "group_by"));
  spec.window_size = parse_duration(take(kv, "window"));
  spec.window_step = parse_duration(take(kv, "step"));
  spec.id = take(kv, "id", false);
  if (spec.id.empty()) spec.id = "q" + std::to_string(line_no);

  const std::string trigger = take(kv, "trigger", false);
  if (trigger.empty() || trigger == "data") {
    spec.trigger = Trigger{TriggerKind::DataDriven, 0};
  } else if (trigger.rfind("clock:", 0) == 0) {
    spec.trigger = Trigger{TriggerKind::ClockDriven, parse_duration(trigger.substr(6))};
  } else {
    throw ParseError("unknown trigger '" + trigger + "' (want data or clock:<dur>)");
  }
  reject_leftovers(kv);
  spec.metric.validate();
  if (spec.window_size < spec.window_step)
    throw ParseError("window smaller than step");
  out.queries.push_back(std::move(spec));
}

ParsedQueryConfig parse_config_stream(std::istream& in) {
  ParsedQueryConfig out;
  std::string line;
  size_t line_no = 0;
  std::string errors;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    try {
      parse_line(line, line_no, out);
    } catch (const Error& e) {
      if (!errors.empty()) errors += "; ";
      errors += "line " + std::to_string(line_no) + ": " + e.what();
    }
  }
  if (!errors.empty()) throw ParseError(errors);
  return out;
}

}  // namespace

ParsedQueryConfig parse_query_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open query config '" + path + "'");
  return parse_config_stream(in);
}

ParsedQueryConfig parse_query_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config_stream(in);
}

}  // namespace scube
