/*
 * Copyright 2026 The ToFu Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TOFU_ERRORS_HPP_
#define TOFU_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tofu {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the operation's domain (too few tokens, bad index, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A reduction schedule would leave the sequence without a DST token.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// Text that failed to parse; `offset` is the first offending character.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Binary file with a wrong magic number or malformed header.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Binary file that ends before its declared payload.
class TruncationError : public FormatError {
 public:
  TruncationError(const std::string& what, std::size_t byte_offset)
      : FormatError(what + " (truncated at byte " +
                    std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Weight file whose tensors disagree with its embedded configuration.
class ShapeMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace tofu

#endif  // TOFU_ERRORS_HPP_
