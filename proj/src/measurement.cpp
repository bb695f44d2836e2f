#include "artlab/measurement.hpp"

#include <algorithm>
#include <cmath>

#include "artlab/error.hpp"

namespace artlab {

bool Measurement::empty() const {
  return std::none_of(mask.values().begin(), mask.values().end(),
                      [](double v) { return v == 1.0; });
}

Measurement make_measurement(const Field& x_true, const Field& mask, const Codec& codec,
                             double noise_std, CounterRng* rng) {
  require_same_shape(x_true, mask, "make_measurement");
  require_binary(mask, "make_measurement");
  if (noise_std < 0.0) throw ValidationError("measurement noise_std must be >= 0");
  Measurement m;
  m.mask = mask;
  m.noise_std = noise_std;
  m.observation = hadamard(mask, x_true);
  if (noise_std > 0.0) {
    if (rng == nullptr) throw ValidationError("noisy measurement needs an rng");
    for (std::size_t i = 0; i < mask.size(); ++i) {
      const double n = rng->normal();
      if (mask[i] == 1.0) m.observation[i] += noise_std * n;
    }
  }
  m.latent_mask = codec.downsample_mask(mask);
  m.latent_observation = codec.downsample_observation(m.observation, mask);
  return m;
}

Field posthoc_replace(const Field& x_gen, const Measurement& m) {
  return elementwise_blend(m.mask, m.observation, x_gen);
}

double measurement_residual(const Field& x, const Measurement& m) {
  require_same_shape(x, m.mask, "measurement_residual");
  double r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (m.mask[i] == 1.0) r = std::max(r, std::abs(x[i] - m.observation[i]));
  }
  return r;
}

}  // namespace artlab
