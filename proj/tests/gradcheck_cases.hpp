// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "support.hpp"

namespace olhtr::test {

struct GradCase {
  std::string name;
  std::function<GradCheckResult()> run;
};

// One case per differentiable kernel plus the model composites, all in
// double precision on small random inputs.
std::vector<GradCase> gradcheck_cases();

}  // namespace olhtr::test
