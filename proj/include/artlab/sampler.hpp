#pragma once

#include <string>

#include "artlab/codec.hpp"
#include "artlab/field.hpp"
#include "artlab/measurement.hpp"
#include "artlab/rng.hpp"
#include "artlab/schedule.hpp"
#include "artlab/score.hpp"

namespace artlab {

/// Everything a sampling step reads besides the latent itself.
struct SamplingContext {
  const ScoreModel& model;
  const NoiseSchedule& schedule;
  const Codec& codec;
  const Measurement* measurement = nullptr;
  Condition condition{};
  GuidanceSpec guidance{};

  Field predict_noise(const Field& z, int t) const {
    return epsilon_cfg(model, z, t, condition, guidance, schedule);
  }
};

/// Clean estimate (z_t - sqrt(1 - abar_t) eps) / sqrt(abar_t).
Field tweedie(const Field& z_t, const Field& eps, int t, const NoiseSchedule& sched);

/// sqrt(abar_prev) * z0_hat + sqrt(1 - abar_prev) * eps. Shared by ddim_step
/// and every solver that ends in a deterministic advance.
Field ddim_advance(const Field& z0_hat, const Field& eps, int t_prev, const NoiseSchedule& sched);

Field ddim_step(const Field& z_t, const Field& eps, int t, int t_prev, const NoiseSchedule& sched);

/// Ancestral step with posterior variance; at t = 0 the noise term is dropped.
Field ddpm_step(const Field& z_t, const Field& eps, int t, const NoiseSchedule& sched,
                const Field& noise);

enum class InitKind { pure, unmasked, offset_noise, prior_ddim, prior_ddpm };

std::string to_string(InitKind kind);
InitKind init_kind_from_string(const std::string& name);

struct InitStrategy {
  InitKind kind = InitKind::prior_ddpm;
  double offset_scale = 0.1;
};

/// Produces z_T at latent resolution. Draw order is fixed: the base normal
/// field first, then any strategy-specific draws.
Field initialize(const InitStrategy& strategy, const SamplingContext& ctx, CounterRng& rng);

}  // namespace artlab
