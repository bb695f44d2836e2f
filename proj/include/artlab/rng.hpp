#pragma once

#include <cstdint>
#include <optional>

#include "artlab/field.hpp"

namespace artlab {

/// Counter-based SplitMix64 generator.
///
/// Draw i of stream (seed, stream) is mix64(key + (i + 1) * 0x9E3779B97F4A7C15)
/// with key = mix64(seed) ^ mix64(stream ^ 0xD1B54A32D192ED03). Normals use the
/// Box-Muller transform so sequences do not depend on the standard library's
/// distribution implementations.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  Field normal_field(const Shape& shape);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  static std::uint64_t mix64(std::uint64_t z) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_normal_;
};

}  // namespace artlab
