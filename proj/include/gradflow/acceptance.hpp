// Copyright 2026 The gradflow Authors
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

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace gradflow::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  /// Failing for a reason analysed in the README (the check is still run and reported).
  bool known_limitation = false;
  std::string detail;
  double seconds = 0.0;
};

/// Criteria ids in run order.
const std::vector<int>& criterion_ids();

/// Run one criterion.
CriterionResult run_criterion(int id);

/// Run the selected criteria (all when empty), printing one line per criterion
/// as soon as it finishes.
std::vector<CriterionResult> run_all(std::ostream& out, const std::set<int>& only = {});

/// 0 when every criterion passes or fails only as a known limitation, else 1.
int exit_status(const std::vector<CriterionResult>& results);

}  // namespace gradflow::acceptance
