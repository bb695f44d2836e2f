#pragma once

#include "artlab/codec.hpp"
#include "artlab/field.hpp"
#include "artlab/rng.hpp"

namespace artlab {

/// Masked observation y = M * x of a pixel-space field, with its
/// latent-resolution counterparts (latent_mask, latent_observation).
struct Measurement {
  Field mask;
  Field observation;
  Field latent_mask;
  Field latent_observation;
  double noise_std = 0.0;

  bool empty() const;
};

/// Builds y = M * x_true (+ noise_std * N(0, I) inside the mask when noise_std
/// > 0, which requires `rng`).
Measurement make_measurement(const Field& x_true, const Field& mask, const Codec& codec,
                             double noise_std = 0.0, CounterRng* rng = nullptr);

/// M * y + (1 - M) * x_gen.
Field posthoc_replace(const Field& x_gen, const Measurement& m);

/// Max |x - y| over the measurement region (0 when the mask is empty).
double measurement_residual(const Field& x, const Measurement& m);

}  // namespace artlab
