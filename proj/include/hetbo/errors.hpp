/*
 * Copyright 2026 The hetbo Authors
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
 */

#pragma once

#include <stdexcept>
#include <string>

namespace hetbo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed data, incompatible inputs, out-of-domain arguments.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Cholesky failures, non-PSD covariances and similar breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class UnsupportedGradient : public Error {
 public:
  using Error::Error;
};

}  // namespace hetbo
