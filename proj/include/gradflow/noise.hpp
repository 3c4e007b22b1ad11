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

#include <array>
#include <cstdint>

#include "gradflow/core_types.hpp"

namespace gradflow {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Output depends only on (key, counter), so any draw can be produced
/// independently of evaluation order or thread schedule.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Reproducible standard-normal draws addressed by (stream, step, particle).
///
/// Stream tags separate independent uses of one seed (initial ensemble,
/// Langevin increments, cosine-moment directions, ...).
class NoiseStream {
 public:
  enum class Tag : std::uint32_t { kDynamics = 0, kInitial = 1, kCosDraws = 2, kMonteCarlo = 3 };

  explicit NoiseStream(std::uint64_t seed, Tag tag = Tag::kDynamics) : seed_(seed), tag_(tag) {}

  std::uint64_t seed() const { return seed_; }
  Tag tag() const { return tag_; }
  NoiseStream with_tag(Tag tag) const { return NoiseStream(seed_, tag); }

  /// `dim` independent N(0, 1) draws for one (step, particle) address.
  Vector gaussian(std::uint64_t step, std::uint32_t particle, int dim) const;

  /// `count` uniform draws in (0, 1) for one (step, particle) address.
  Vector uniform(std::uint64_t step, std::uint32_t particle, int count) const;

  /// Row j holds gaussian(step, j, dim).
  ParticleMatrix gaussian_matrix(std::uint64_t step, int rows, int dim) const;

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t step, std::uint32_t particle, std::uint32_t index) const;

  std::uint64_t seed_;
  Tag tag_;
};

}  // namespace gradflow
