/*
 * Copyright 2026 The TaxoRAG Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
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

namespace taxorag {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid or incomplete configuration; raised before any work starts.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Input data violates a documented precondition (bad record, empty text, ...).
class InvalidInput : public Error {
  public:
    using Error::Error;
};

/// Vector dimensions disagree (store vs. query vs. config).
class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

/// A model reply could not be parsed into the expected structure.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Failure talking to a hosted model.
class ProviderError : public Error {
  public:
    enum class Kind {
        auth,       ///< 401/403; never retried
        timeout,    ///< retries exhausted on timeouts / connection failures
        transient,  ///< retries exhausted on 429 / 5xx
        malformed,  ///< the provider answered with a payload we cannot read
        rejected,   ///< other 4xx
    };

    ProviderError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

/// Vector store file could not be loaded.
class StoreFormatError : public Error {
  public:
    enum class Kind { bad_magic, version_mismatch, checksum_mismatch, truncated, malformed };

    StoreFormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

}  // namespace taxorag
