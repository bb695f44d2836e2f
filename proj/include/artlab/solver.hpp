#pragma once

#include <optional>
#include <string>

#include "artlab/field.hpp"
#include "artlab/measurement.hpp"
#include "artlab/rng.hpp"
#include "artlab/sampler.hpp"
#include "artlab/schedule.hpp"

namespace artlab {

enum class SolverKind { none, posthoc_only, repaint, mcg, dps, fig, dreamsampler, treg, art };

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

/// Amplitude rule for the injected noise eta * beta_t of the hybrid solvers.
enum class NoiseRule {
  dreamsampler,  // sqrt(abar_t * (1 - abar_prev))
  treg,          // sqrt(abar_prev * (1 - abar_prev))
};

std::string to_string(NoiseRule rule);
NoiseRule noise_rule_from_string(const std::string& name);

struct PixelOptSpec {
  double learning_rate = 1e-3;
  double lambda = 1e-4;
  int iterations = 1000;
  bool closed_form = false;
};

struct SolverSpec {
  std::string label;
  SolverKind kind = SolverKind::art;
  double gamma = 1.0;
  /// Defaults to the rule belonging to `kind`.
  std::optional<NoiseRule> eta_beta_rule;
  /// Multiplies eta * beta_t; 0 turns the hybrid solvers deterministic.
  double eta_scale = 1.0;
  PixelOptSpec pixel_opt{};
  double freq_cutoff = 0.5;
  /// Every N-th inference step is a plain DDIM step; 0 disables them.
  int denoise_period = 2;
  bool finalize_posthoc = false;
  /// ART component switches (hard constraint is always on).
  bool data_consistency = true;
  bool frequency_correction = true;

  std::string display_name() const { return label.empty() ? to_string(kind) : label; }
  NoiseRule noise_rule() const;
  bool is_hybrid() const { return kind == SolverKind::dreamsampler || kind == SolverKind::treg; }
  bool guides() const { return kind != SolverKind::none && kind != SolverKind::posthoc_only; }
  /// Whether step `step_index` of a plan with `plan_steps` steps is a plain
  /// DDIM step. Every N-th step is, except that for N >= 2 the last step is
  /// always guided so the sample ends on a measurement-constrained update.
  /// N = 1 makes every step standard.
  bool is_standard_step(std::size_t step_index, std::size_t plan_steps) const;

  void validate() const;
  /// Checks eta^2 beta_t^2 <= 1 - abar_prev on every step of the plan.
  void validate_against(const TimestepPlan& plan, const NoiseSchedule& sched) const;
};

/// Inputs shared by every guided step at inference step t -> t_prev.
struct StepInputs {
  const Field& z_t;
  int t;
  int t_prev;
  const Field& eps;     // eps_theta(z_t, t, c) with guidance applied
  const Field& z0_hat;  // tweedie(z_t, eps, t)
};

/// y_bar_{t-1} ~ N(sqrt(abar_prev) y_bar, (1 - abar_prev) I), spliced into z_prev
/// on the latent mask. A full noise field is drawn regardless of the mask.
Field repaint_step(const Field& z_prev, int t_prev, const Measurement& m,
                   const NoiseSchedule& sched, CounterRng& rng);

/// ||y_bar - M_bar * z0_hat(z_t)||^2 at z_t.
double measurement_loss(const SamplingContext& ctx, const Field& z_t, int t);
/// Gradient of measurement_loss with respect to z_t through the exact eps.
Field measurement_gradient(const SamplingContext& ctx, const Field& z_t, int t,
                           const Field& z0_hat);

Field mcg_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec,
               CounterRng& rng);
Field dps_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec);
Field fig_step(const Field& z_prev, int t_prev, const Measurement& m, const SolverSpec& spec,
               const NoiseSchedule& sched, CounterRng& rng);

/// argmin_x ||y - M x||^2 + lambda ||x - anchor||^2. The iterative path runs
/// plain gradient descent from M * y + (1 - M) * anchor.
Field pixel_optimize(const Field& y, const Field& mask, const Field& anchor,
                     const PixelOptSpec& opt);

double eta_beta(NoiseRule rule, int t, int t_prev, const NoiseSchedule& sched,
                double eta_scale = 1.0);

/// (sqrt(1 - abar_prev - (eta beta)^2) eps + eta beta xi) / sqrt(1 - abar_prev).
/// Returns eps exactly when eta beta == 0 or abar_prev == 1.
Field hybrid_noise(const Field& eps, int t, int t_prev, NoiseRule rule,
                   const NoiseSchedule& sched, CounterRng& rng, double eta_scale = 1.0);

Field dreamsampler_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec,
                        CounterRng& rng);
Field treg_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec,
                CounterRng& rng);

/// Intermediate latents of one ART step, exposed for inspection.
struct ArtStepTrace {
  Field constrained_pixels;  // M y + (1 - M) D(z0_hat)
  Field constrained_latent;  // E(constrained_pixels)
  Field corrected_latent;    // low(constrained_latent) + high(z0_hat)
  Field blended_latent;      // masked interpolation toward corrected_latent
  Field next;                // DDIM advance from blended_latent
};

ArtStepTrace art_step_traced(const SamplingContext& ctx, const StepInputs& in,
                             const SolverSpec& spec);
Field art_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec);

/// Dispatches a measurement-guided step for spec.kind.
Field guided_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec,
                  CounterRng& rng);

}  // namespace artlab
