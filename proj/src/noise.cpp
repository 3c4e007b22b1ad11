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

#include "gradflow/noise.hpp"

#include <cmath>
#include <numbers>

namespace gradflow {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in the open interval (0, 1).
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
  return (static_cast<double>(bits & ((1ULL << 53) - 1)) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<std::uint32_t, 4> NoiseStream::block(std::uint64_t step, std::uint32_t particle,
                                                std::uint32_t index) const {
  const std::uint32_t tag = static_cast<std::uint32_t>(tag_);
  // The tag lives in the top byte of the block index so streams never collide.
  return philox4x32({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), particle,
                     (tag << 24) | (index & 0x00FFFFFFu)},
                    {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
}

Vector NoiseStream::uniform(std::uint64_t step, std::uint32_t particle, int count) const {
  Vector out(count);
  for (int k = 0; k < count; k += 2) {
    const auto r = block(step, particle, static_cast<std::uint32_t>(k / 2));
    out[k] = to_open_unit(r[0], r[1]);
    if (k + 1 < count) out[k + 1] = to_open_unit(r[2], r[3]);
  }
  return out;
}

Vector NoiseStream::gaussian(std::uint64_t step, std::uint32_t particle, int dim) const {
  // Box-Muller on one Philox block per pair of outputs.
  Vector out(dim);
  for (int k = 0; k < dim; k += 2) {
    const auto r = block(step, particle, static_cast<std::uint32_t>(k / 2));
    const double u1 = to_open_unit(r[0], r[1]);
    const double u2 = to_open_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[k] = radius * std::cos(angle);
    if (k + 1 < dim) out[k + 1] = radius * std::sin(angle);
  }
  return out;
}

ParticleMatrix NoiseStream::gaussian_matrix(std::uint64_t step, int rows, int dim) const {
  ParticleMatrix out(rows, dim);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < rows; ++j) {
    out.row(j) = gaussian(step, static_cast<std::uint32_t>(j), dim).transpose();
  }
  return out;
}

}  // namespace gradflow
