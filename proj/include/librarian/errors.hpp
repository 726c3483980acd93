/*
 * Copyright 2026 The Librarian Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace librarian {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  // Stable short name used in reports, e.g. "MalformedElf".
  virtual const char* kind() const noexcept { return "Error"; }
};

// Carries the byte offset at which the problem was detected.
class PositionedError : public Error {
 public:
  PositionedError(const std::string& what, std::uint64_t position);
  std::uint64_t position() const noexcept { return position_; }

 private:
  std::uint64_t position_;
};

class MalformedElf : public PositionedError {
 public:
  using PositionedError::PositionedError;
  const char* kind() const noexcept override { return "MalformedElf"; }
};

class UnsupportedClass : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "UnsupportedClass"; }
};

class SchemaError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "SchemaError"; }
};

class ConflictingLabel : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "ConflictingLabel"; }
};

class EmptyIndex : public Error {
 public:
  EmptyIndex() : Error("index contains no records") {}
  const char* kind() const noexcept override { return "EmptyIndex"; }
};

class NotAZip : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "NotAZip"; }
};

class CorruptArchive : public PositionedError {
 public:
  using PositionedError::PositionedError;
  const char* kind() const noexcept override { return "CorruptArchive"; }
};

class InvalidPair : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "InvalidPair"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "IoError"; }
};

}  // namespace librarian
