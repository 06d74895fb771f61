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

#include "scube/sequence.hpp"

#include <algorithm>

namespace scube {

bool EventPredicate::matches(const TransactionRecord& rec) const {
  FieldRef f = record_field(rec, field);
  if (numeric) {
    const int64_t v = f.num;
    switch (op) {
      case CmpOp::Eq: return v == num_value;
      case CmpOp::Ne: return v != num_value;
      case CmpOp::Lt: return v < num_value;
      case CmpOp::Le: return v <= num_value;
      case CmpOp::Gt: return v > num_value;
      case CmpOp::Ge: return v >= num_value;
    }
    return false;
  }
  switch (op) {
    case CmpOp::Eq: return f.text == text_value;
    case CmpOp::Ne: return f.text != text_value;
    default: return false;  // rejected at compile time
  }
}

SequenceMatcher SequenceMatcher::compile(SequencePattern pattern) {
  if (pattern.steps.size() < 2)
    throw PatternError("pattern needs at least 2 steps, got " + std::to_string(pattern.steps.size()));
  if (pattern.within <= 0) throw PatternError("pattern 'within' must be positive");
  if (pattern.group_by.empty()) throw PatternError("pattern needs a group-by field");
  for (const auto& f : pattern.group_by)
    if (!schema_has_field(f)) throw PatternError("unknown group-by field '" + f + "'");
  for (const auto& step : pattern.steps) {
    if (step.empty()) throw PatternError("empty pattern step");
    for (const auto& pred : step) {
      if (!schema_has_field(pred.field))
        throw PatternError("predicate on unknown field '" + pred.field + "'");
      const bool field_numeric = schema_field_type(pred.field) == FieldType::Integer;
      if (pred.numeric != field_numeric)
        throw PatternError("predicate value type does not match field '" + pred.field + "'");
      if (!pred.numeric && pred.op != CmpOp::Eq && pred.op != CmpOp::Ne)
        throw PatternError("ordered comparison on text field '" + pred.field + "'");
    }
  }
  return SequenceMatcher(std::move(pattern));
}

bool SequenceMatcher::step_matches(size_t step, const TransactionRecord& rec) const {
  for (const auto& pred : pattern_.steps[step])
    if (!pred.matches(rec)) return false;
  return true;
}

DimensionKey SequenceMatcher::key_of(const TransactionRecord& rec) const {
  std::string key_buf;
  for (size_t i = 0; i < pattern_.group_by.size(); ++i) {
    if (i != 0) key_buf.push_back('|');
    FieldRef f = record_field(rec, pattern_.group_by[i]);
    if (f.type == FieldType::Text) key_buf.append(f.text);
    else key_buf.append(std::to_string(f.num));
  }
  return DimensionKey{std::move(key_buf)};
}

std::vector<CompletedMatch> SequenceMatcher::feed(const TransactionRecord& rec, uint64_t event_id) {
  DimensionKey key = key_of(rec);
  const Timestamp t = rec.trans_time;

  std::vector<CompletedMatch> completions;
  auto& partials = state_[key];

  // Prune hopeless partials first: with nondecreasing time, nothing at or
  // after t can extend a match whose first event is older than t - within.
  std::erase_if(partials, [&](const PartialMatch& m) { return m.first_time < t - pattern_.within; });

  size_t kept = 0;
  for (size_t i = 0; i < partials.size(); ++i) {
    PartialMatch& m = partials[i];
    bool completed = false;
    if (step_matches(m.next_step, rec) && t - m.first_time <= pattern_.within) {
      m.event_ids.push_back(event_id);
      ++m.next_step;
      if (m.next_step == pattern_.steps.size()) {
        CompletedMatch done;
        done.pattern_id = pattern_.id;
        done.key = key;
        done.first_time = m.first_time;
        done.last_time = t;
        done.event_ids = std::move(m.event_ids);
        completions.push_back(std::move(done));
        completed = true;
      }
    }
    if (!completed) {
      if (kept != i) partials[kept] = std::move(partials[i]);
      ++kept;
    }
  }
  partials.resize(kept);

  if (step_matches(0, rec)) {
    PartialMatch fresh;
    fresh.next_step = 1;
    fresh.first_time = t;
    fresh.event_ids.push_back(event_id);
    partials.push_back(std::move(fresh));
  }
  if (partials.empty()) state_.erase(key);
  return completions;
}

uint64_t SequenceMatcher::expire(Timestamp watermark) {
  uint64_t pruned = 0;
  for (auto it = state_.begin(); it != state_.end();) {
    auto& partials = it->second;
    const size_t before = partials.size();
    std::erase_if(partials,
                  [&](const PartialMatch& m) { return m.first_time < watermark - pattern_.within; });
    pruned += before - partials.size();
    if (partials.empty()) it = state_.erase(it);
    else ++it;
  }
  return pruned;
}

uint64_t SequenceMatcher::live_partials(const DimensionKey& key) const {
  auto it = state_.find(key);
  return it == state_.end() ? 0 : it->second.size();
}

uint64_t SequenceMatcher::live_partials_total() const {
  uint64_t total = 0;
  for (const auto& [key, partials] : state_) total += partials.size();
  return total;
}

}  // namespace scube
