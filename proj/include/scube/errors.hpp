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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scube {

/// Base of everything this library throws.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Aggregate algebra.
class InvalidMeasure : public Error { public: using Error::Error; };
class IncompatiblePartials : public Error { public: using Error::Error; };
class EmptyWindow : public Error { public: using Error::Error; };

// Slicing and storage.
class InvalidSpec : public Error { public: using Error::Error; };
class OutOfRange : public Error { public: using Error::Error; };
class SealedSliceWrite : public Error { public: using Error::Error; };
class InvalidRange : public Error { public: using Error::Error; };
class SnapshotError : public Error { public: using Error::Error; };

// Engine front door.
class GranularityMismatch : public Error { public: using Error::Error; };
class DuplicateQuery : public Error { public: using Error::Error; };
class UnknownQuery : public Error { public: using Error::Error; };
class AlignmentError : public Error { public: using Error::Error; };
class ClockError : public Error { public: using Error::Error; };

// Sequence patterns.
class PatternError : public Error { public: using Error::Error; };

// Data input.
class ConfigError : public Error { public: using Error::Error; };

/// Malformed input row or config line. Carries a 1-based line number when the
/// source is a file.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg, size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// Benchmark harness.
class BaselineExhausted : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

}  // namespace scube
