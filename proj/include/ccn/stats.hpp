// Copyright 2026 The ccnaming Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ccn/common.hpp"

namespace ccn {

double mean(std::span<const double> x);
// Sample standard deviation (n-1 denominator); 0 for n < 2.
double sample_sd(std::span<const double> x);

// Standard product-moment correlation. Requires equal lengths >= 3
// (throws otherwise); returns nullopt when either vector is constant
// (the paper's "NA" convention).
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Average ranks (ties share the mean rank), 1-based.
std::vector<double> average_ranks(std::span<const double> x);

// Pearson correlation of average ranks.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

}  // namespace ccn
