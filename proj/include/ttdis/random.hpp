// Copyright 2026 The ttdis Authors
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

#ifndef TTDIS_RANDOM_HPP
#define TTDIS_RANDOM_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace ttdis {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The key is
/// the user seed, the upper counter words select an independent stream, and
/// the lower words count blocks within the stream.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned next_ = 4;
};

/// Named random stream: draws are a pure function of (seed, stream id, draw index).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) : engine_(seed, stream) {}

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();

  /// Standard normal by inversion of the uniform draw.
  double normal();

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  Philox4x32& engine() { return engine_; }

 private:
  Philox4x32 engine_;
};

/// Stream ids used across the library, combined with a replicate index so that
/// every replicate and purpose gets its own sequence.
enum class StreamPurpose : std::uint64_t {
  cross_pivots = 1,
  cross_residual = 2,
  reference_samples = 3,
  coupling_noise = 4,
  hellinger = 5,
  cross_entropy = 6,
  data_noise = 7,
};

RandomStream make_stream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t replicate = 0);

}  // namespace ttdis

#endif  // TTDIS_RANDOM_HPP
