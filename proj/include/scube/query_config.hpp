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

#include <string>
#include <vector>

#include "scube/engine.hpp"
#include "scube/sequence.hpp"

namespace scube {

struct ParsedQueryConfig {
  std::vector<QuerySpec> queries;
  std::vector<SequencePattern> sequences;
};

/// Parses the line-oriented query config. One query per line:
///
///   metric=<kind> field=<name> [field2=<name>] group_by=<f1[,f2]>
///       window=<dur> step=<dur> [trigger=data|clock:<dur>] [id=<name>]
///   sequence steps=<pred;pred;...> within=<dur> group_by=<f> [id=<name>]
///
/// Kinds: count,sum,avg,min,max,variance,stddev,moment:<k>,cov,distinct,
/// run_inc,run_dec. Predicates are conjunctions joined by '&' of
/// <field><op><value> with ops = != < <= > >=. '#' starts a comment.
/// Any bad line rejects the whole file: the ParseError message lists every
/// offending line.
ParsedQueryConfig parse_query_config(const std::string& path);

/// Same, from an in-memory string (tests).
ParsedQueryConfig parse_query_config_text(const std::string& text);

}  // namespace scube
