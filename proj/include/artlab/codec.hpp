#pragma once

#include <string>

#include "artlab/field.hpp"

namespace artlab {

enum class CodecKind { identity, blockmean };

std::string to_string(CodecKind kind);
CodecKind codec_kind_from_string(const std::string& name);

/// Deterministic pixel <-> latent pair. `blockmean` encodes each f x f block
/// to its mean and decodes by replication, so encode(decode(z)) == z while
/// decode(encode(x)) discards all within-block detail.
struct Codec {
  CodecKind kind = CodecKind::identity;
  int factor = 2;
  /// Encoder reconstruction noise scale. Only scales the data-consistency
  /// objective, which the closed-form update never evaluates.
  double sigma_e = 0.05;

  static Codec identity() { return {CodecKind::identity, 1, 0.05}; }
  static Codec blockmean(int factor, double sigma_e = 0.05) {
    return {CodecKind::blockmean, factor, sigma_e};
  }

  void validate() const;
  int scale() const noexcept { return kind == CodecKind::blockmean ? factor : 1; }
  Shape latent_shape(const Shape& pixel) const;
  Shape pixel_shape(const Shape& latent) const;

  Field encode(const Field& x) const;
  Field decode(const Field& z) const;

  /// Binary latent-resolution mask: block mean of `mask` thresholded at 0.5.
  Field downsample_mask(const Field& mask) const;
  /// Latent-resolution observation: mean of the observed pixels of each block
  /// where the downsampled mask is 1, zero elsewhere.
  Field downsample_observation(const Field& y, const Field& mask) const;
};

}  // namespace artlab
