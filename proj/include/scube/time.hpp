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
#include <string>
#include <string_view>

namespace scube {

// Event time and durations are plain milliseconds. Records carry epoch-ms
// timestamps; nothing in the engine needs calendar arithmetic.
using Timestamp = int64_t;
using Duration = int64_t;

constexpr Duration kMillisecond = 1;
constexpr Duration kSecond = 1000;
constexpr Duration kMinute = 60 * kSecond;
constexpr Duration kHour = 60 * kMinute;
constexpr Duration kDay = 24 * kHour;

/// Parses "90d", "4h", "30m", "15s" or "500ms" into milliseconds.
/// Throws InvalidSpec on anything else or on non-positive values
/// (zero is fine when allow_zero is set).
Duration parse_duration(std::string_view text, bool allow_zero = false);

/// Renders a duration with the largest unit that divides it evenly ("90d",
/// "7h", "1500ms").
std::string format_duration(Duration d);

/// floor(a / b) for possibly negative a, positive b.
constexpr int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

constexpr int64_t ceil_div(int64_t a, int64_t b) { return -floor_div(-a, b); }

}  // namespace scube
