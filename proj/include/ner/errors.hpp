// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ner {

// Shapes of operands disagree.
class DimensionError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// An argument is outside its admissible range (dropout rate, dim, ...).
class ParameterError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// A forward value or gradient became NaN or infinite.
class NumericError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Misuse of the tape (second backward, non-scalar loss).
class TapeError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error
{
public:
    ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_ { line }
    {}

    [[nodiscard]] auto line() const noexcept -> std::size_t { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that violates a domain rule (bad NER tag, tag
// inventory mismatch, misaligned predictions).
class ValidationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Checkpoint is truncated, corrupt or of an unsupported version.
class IntegrityError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace ner
