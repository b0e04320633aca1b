// Copyright 2026 The semmass Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
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

namespace semmass {

// Base of every error the library throws. Callers that only need "did it
// work" can catch this; the CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. `field` names the offending field when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Well-formed input violating a type invariant. `invariant` is a stable
// short name ("prob mass exceeds 1", ...) that tests and reports key on.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& invariant, const std::string& detail = {})
      : Error(detail.empty() ? invariant : invariant + " (" + detail + ")"),
        invariant_(invariant) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A bad line inside a corpus file; wraps the underlying cause.
class CorpusError : public Error {
 public:
  CorpusError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Operation called outside its domain (single-class AUROC, n < 2, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Failure inside one pipeline stage, with the sample being processed.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& sample_id, const std::string& what)
      : Error(stage + (sample_id.empty() ? "" : " [" + sample_id + "]") + ": " + what),
        stage_(stage),
        sample_id_(sample_id) {}
  const std::string& stage() const noexcept { return stage_; }
  const std::string& sample_id() const noexcept { return sample_id_; }

 private:
  std::string stage_;
  std::string sample_id_;
};

}  // namespace semmass
