/*
 * Copyright 2026 The ACR Authors.
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

namespace acr {

// Base class for every error raised by the library. The CLI maps
// NumericFailure to exit code 3 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

// AUROC / FPR95 need at least one correct and one incorrect sample.
class DegenerateSplit : public Error {
 public:
  using Error::Error;
};

// Raised by the trainer when a loss becomes non-finite.
class DivergedTraining : public Error {
 public:
  DivergedTraining(int epoch, const std::string& what)
      : Error("training diverged at epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace acr
