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

// Exhaustive skip-till-next-match reference: for every event satisfying step
// 0, extend greedily with the earliest later event satisfying each next step
// inside the `within` horizon. Independent of the incremental matcher.

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scube/record.hpp"
#include "scube/sequence.hpp"

namespace scube::testing {

inline std::vector<std::vector<uint64_t>> oracle_sequence_matches(
    std::span<const TransactionRecord> events, std::span<const uint64_t> ids,
    const SequencePattern& pattern) {
  auto step_matches = [&](size_t step, const TransactionRecord& rec) {
    for (const auto& pred : pattern.steps[step])
      if (!pred.matches(rec)) return false;
    return true;
  };
  auto key_of = [&](const TransactionRecord& rec) {
    std::string key;
    for (size_t i = 0; i < pattern.group_by.size(); ++i) {
      if (i != 0) key.push_back('|');
      FieldRef f = record_field(rec, pattern.group_by[i]);
      if (f.type == FieldType::Text) key.append(f.text);
      else key.append(std::to_string(f.num));
    }
    return key;
  };

  std::map<std::string, std::vector<size_t>> per_key;
  for (size_t i = 0; i < events.size(); ++i) per_key[key_of(events[i])].push_back(i);

  std::vector<std::vector<uint64_t>> matches;
  for (const auto& [key, indices] : per_key) {
    for (size_t s = 0; s < indices.size(); ++s) {
      const TransactionRecord& first = events[indices[s]];
      if (!step_matches(0, first)) continue;
      std::vector<uint64_t> trail{ids[indices[s]]};
      size_t at = s;
      bool complete = true;
      for (size_t step = 1; step < pattern.steps.size(); ++step) {
        bool found = false;
        for (size_t j = at + 1; j < indices.size(); ++j) {
          const TransactionRecord& cand = events[indices[j]];
          if (cand.trans_time - first.trans_time > pattern.within) break;
          if (step_matches(step, cand)) {
            trail.push_back(ids[indices[j]]);
            at = j;
            found = true;
            break;
          }
        }
        if (!found) {
          complete = false;
          break;
        }
      }
      if (complete) matches.push_back(std::move(trail));
    }
  }
  std::sort(matches.begin(), matches.end());
  return matches;
}

}  // namespace scube::testing
