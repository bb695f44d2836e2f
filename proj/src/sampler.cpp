#include "artlab/sampler.hpp"

#include <cmath>

#include "artlab/error.hpp"

namespace artlab {

Field tweedie(const Field& z_t, const Field& eps, int t, const NoiseSchedule& sched) {
  require_same_shape(z_t, eps, "tweedie");
  sched.check_timestep(t);
  const double abar = sched.alpha_bar(t);
  if (abar <= 0.0) {
    throw SingularityError("tweedie: alpha_bar is zero at timestep " + std::to_string(t));
  }
  const double noise_scale = std::sqrt(1.0 - abar);
  const double inv = 1.0 / std::sqrt(abar);
  Field out(z_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (z_t[i] - noise_scale * eps[i]) * inv;
  return out;
}

Field ddim_advance(const Field& z0_hat, const Field& eps, int t_prev, const NoiseSchedule& sched) {
  require_same_shape(z0_hat, eps, "ddim_advance");
  const double abar_prev = sched.alpha_bar(t_prev);
  const double a = std::sqrt(abar_prev);
  const double b = std::sqrt(1.0 - abar_prev);
  Field out(z0_hat.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * z0_hat[i] + b * eps[i];
  return out;
}

Field ddim_step(const Field& z_t, const Field& eps, int t, int t_prev, const NoiseSchedule& sched) {
  if (t_prev >= t) {
    throw ValidationError("ddim_step needs t_prev < t, got t=" + std::to_string(t) +
                          " t_prev=" + std::to_string(t_prev));
  }
  return ddim_advance(tweedie(z_t, eps, t, sched), eps, t_prev, sched);
}

Field ddpm_step(const Field& z_t, const Field& eps, int t, const NoiseSchedule& sched,
                const Field& noise) {
  require_same_shape(z_t, eps, "ddpm_step");
  require_same_shape(z_t, noise, "ddpm_step");
  sched.check_timestep(t);
  const double abar = sched.alpha_bar(t);
  if (abar >= 1.0) throw SingularityError("ddpm_step: no noise at timestep " + std::to_string(t));
  const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha(t));
  const double eps_coef = sched.beta(t) / std::sqrt(1.0 - abar);
  const double noise_coef = t == 0 ? 0.0 : std::sqrt(sched.posterior_variance(t));
  Field out(z_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = inv_sqrt_alpha * (z_t[i] - eps_coef * eps[i]) + noise_coef * noise[i];
  }
  return out;
}

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::pure: return "pure";
    case InitKind::unmasked: return "unmasked";
    case InitKind::offset_noise: return "offset_noise";
    case InitKind::prior_ddim: return "prior_ddim";
    case InitKind::prior_ddpm: return "prior_ddpm";
  }
  return "unknown";
}

InitKind init_kind_from_string(const std::string& name) {
  if (name == "pure") return InitKind::pure;
  if (name == "unmasked") return InitKind::unmasked;
  if (name == "offset_noise") return InitKind::offset_noise;
  if (name == "prior_ddim") return InitKind::prior_ddim;
  if (name == "prior_ddpm") return InitKind::prior_ddpm;
  throw ValidationError("unknown init strategy '" + name + "'");
}

Field initialize(const InitStrategy& strategy, const SamplingContext& ctx, CounterRng& rng) {
  const Shape shape = ctx.model.shape();
  const NoiseSchedule& sched = ctx.schedule;
  const int t_last = sched.num_steps() - 1;
  Field z = rng.normal_field(shape);
  switch (strategy.kind) {
    case InitKind::pure:
      return z;
    case InitKind::unmasked: {
      if (ctx.measurement == nullptr) {
        throw ValidationError("init strategy 'unmasked' requires a measurement");
      }
      const Measurement& m = *ctx.measurement;
      const Field noise = rng.normal_field(shape);
      const Field noised = forward_noise(m.latent_observation, t_last, noise, sched);
      return elementwise_blend(m.latent_mask, noised, z);
    }
    case InitKind::offset_noise: {
      for (int c = 0; c < shape.channels; ++c) {
        const double offset = strategy.offset_scale * rng.normal();
        for (double& v : z.plane(c)) v += offset;
      }
      return z;
    }
    case InitKind::prior_ddim: {
      const Field eps = ctx.predict_noise(z, t_last);
      return ddim_step(z, eps, t_last, t_last - 1, sched);
    }
    case InitKind::prior_ddpm: {
      const Field eps = ctx.predict_noise(z, t_last);
      const Field noise = rng.normal_field(shape);
      return ddpm_step(z, eps, t_last, sched, noise);
    }
  }
  throw ValidationError("unhandled init strategy");
}

}  // namespace artlab
