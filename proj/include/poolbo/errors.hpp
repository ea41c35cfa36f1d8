/*
 * Copyright 2026 The poolbo Authors
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
 */

#ifndef POOLBO_ERRORS_HPP
#define POOLBO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace poolbo {

/// Base class of every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input data or a model spec does not match the expected schema.
struct SchemaError : Error {
    using Error::Error;
};

/// Numerical failure: non-finite values or a factorization breakdown.
struct NumericError : Error {
    using Error::Error;
};

/// Invalid campaign or tool configuration.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace poolbo

#endif // POOLBO_ERRORS_HPP
