// sepdet/errors.hpp

// Copyright 2026 the sepdet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace sepdet {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable/unwritable files, missing paths.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("i/o error: " + msg) {}
};

// Malformed or unsupported file contents.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error("format error: " + msg) {}
};

// Invalid configuration values or schema violations.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

// Manifest / dataset level problems (missing class, duplicate ids, ...).
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error("data error: " + msg) {}
};

// Metric undefined for the given inputs (e.g. single-class score set).
class MetricError : public Error {
 public:
  explicit MetricError(const std::string& msg) : Error("metric error: " + msg) {}
};

// External separator adapter failures.
class AdapterError : public Error {
 public:
  explicit AdapterError(const std::string& msg) : Error("adapter error: " + msg) {}
};

// Attack stage failures (encoder missing, codec round trip failed, ...).
class AttackError : public Error {
 public:
  explicit AttackError(const std::string& msg) : Error("attack error: " + msg) {}
};

}  // namespace sepdet
