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

#include "scube/time.hpp"

#include <charconv>

#include "scube/errors.hpp"

namespace scube {

Duration parse_duration(std::string_view text, bool allow_zero) {
  size_t i = 0;
  while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) != 0)) ++i;
  if (i == 0) throw InvalidSpec("duration must start with digits: '" + std::string(text) + "'");

  int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + i, value);
  if (ec != std::errc{} || ptr != text.data() + i)
    throw InvalidSpec("bad duration value: '" + std::string(text) + "'");

  std::string_view unit = text.substr(i);
  Duration scale;
  if (unit == "d") scale = kDay;
  else if (unit == "h") scale = kHour;
  else if (unit == "m") scale = kMinute;
  else if (unit == "s") scale = kSecond;
  else if (unit == "ms") scale = kMillisecond;
  else throw InvalidSpec("unknown duration unit '" + std::string(unit) + "' (want d/h/m/s/ms)");

  if (value < 0 || (value == 0 && !allow_zero))
    throw InvalidSpec("duration must be positive: '" + std::string(text) + "'");
  return value * scale;
}

std::string format_duration(Duration d) {
  struct Unit { Duration scale; const char* suffix; };
  static constexpr Unit units[] = {{kDay, "d"}, {kHour, "h"}, {kMinute, "m"}, {kSecond, "s"}};
  for (const auto& u : units) {
    if (d != 0 && d % u.scale == 0) return std::to_string(d / u.scale) + u.suffix;
  }
  return std::to_string(d) + "ms";
}

}  // namespace scube
