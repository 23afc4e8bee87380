/*
 * Copyright 2026 The sysid Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace sysid {

/// Error categories. Each maps onto a status code of the C API and, through
/// it, onto a CLI exit code.
enum class ErrorKind {
  dimension,
  parameter,
  config,
  data,
  parse,
  schema,
  io,
  degenerate,
  unsupported,
  numeric,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class KindError : public Error {
 public:
  explicit KindError(const std::string& message) : Error(K, message) {}
};

using DimensionError = KindError<ErrorKind::dimension>;
using ParameterError = KindError<ErrorKind::parameter>;
using ConfigError = KindError<ErrorKind::config>;
using DataError = KindError<ErrorKind::data>;
using ParseError = KindError<ErrorKind::parse>;
using SchemaError = KindError<ErrorKind::schema>;
using IoError = KindError<ErrorKind::io>;
using DegenerateError = KindError<ErrorKind::degenerate>;
using UnsupportedError = KindError<ErrorKind::unsupported>;
using NumericError = KindError<ErrorKind::numeric>;

}  // namespace sysid
