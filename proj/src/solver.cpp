#include "artlab/solver.hpp"

#include <cmath>

#include "artlab/error.hpp"

namespace artlab {

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::none: return "none";
    case SolverKind::posthoc_only: return "posthoc_only";
    case SolverKind::repaint: return "repaint";
    case SolverKind::mcg: return "mcg";
    case SolverKind::dps: return "dps";
    case SolverKind::fig: return "fig";
    case SolverKind::dreamsampler: return "dreamsampler";
    case SolverKind::treg: return "treg";
    case SolverKind::art: return "art";
  }
  return "unknown";
}

SolverKind solver_kind_from_string(const std::string& name) {
  for (auto k : {SolverKind::none, SolverKind::posthoc_only, SolverKind::repaint, SolverKind::mcg,
                 SolverKind::dps, SolverKind::fig, SolverKind::dreamsampler, SolverKind::treg,
                 SolverKind::art}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown solver kind '" + name + "'");
}

std::string to_string(NoiseRule rule) {
  return rule == NoiseRule::dreamsampler ? "dreamsampler" : "treg";
}

NoiseRule noise_rule_from_string(const std::string& name) {
  if (name == "dreamsampler") return NoiseRule::dreamsampler;
  if (name == "treg") return NoiseRule::treg;
  throw ValidationError("unknown eta_beta rule '" + name + "'");
}

NoiseRule SolverSpec::noise_rule() const {
  if (eta_beta_rule) return *eta_beta_rule;
  return kind == SolverKind::treg ? NoiseRule::treg : NoiseRule::dreamsampler;
}

bool SolverSpec::is_standard_step(std::size_t step_index, std::size_t plan_steps) const {
  if (!guides()) return true;
  if (denoise_period <= 0) return false;
  if (denoise_period == 1) return true;
  if (step_index + 1 >= plan_steps) return false;
  return (step_index + 1) % static_cast<std::size_t>(denoise_period) == 0;
}

void SolverSpec::validate() const {
  const std::string who = "solver '" + display_name() + "': ";
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ValidationError(who + "gamma must be >= 0");
  if (!(eta_scale >= 0.0) || !std::isfinite(eta_scale)) {
    throw ValidationError(who + "eta_scale must be >= 0");
  }
  if (!(pixel_opt.learning_rate > 0.0)) throw ValidationError(who + "learning_rate must be > 0");
  if (!(pixel_opt.lambda > 0.0)) throw ValidationError(who + "lambda must be > 0");
  if (pixel_opt.iterations < 0) throw ValidationError(who + "iterations must be >= 0");
  if (!(freq_cutoff >= 0.0 && freq_cutoff <= 1.0)) {
    throw ValidationError(who + "freq_cutoff must lie in [0,1]");
  }
  if (denoise_period < 0) throw ValidationError(who + "denoise_period must be >= 0");
}

void SolverSpec::validate_against(const TimestepPlan& plan, const NoiseSchedule& sched) const {
  validate();
  if (!is_hybrid()) return;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const int t = plan.current(i);
    const int t_prev = plan.previous(i);
    const double eb = eta_beta(noise_rule(), t, t_prev, sched, eta_scale);
    if (eb * eb > 1.0 - sched.alpha_bar(t_prev) + 1e-12) {
      throw ScheduleError("solver '" + display_name() + "': eta*beta_t exceeds sqrt(1 - " +
                              "alpha_bar_prev) at timestep " + std::to_string(t),
                          t);
    }
  }
}

// ---------------------------------------------------------------------------

Field repaint_step(const Field& z_prev, int t_prev, const Measurement& m,
                   const NoiseSchedule& sched, CounterRng& rng) {
  require_same_shape(z_prev, m.latent_mask, "repaint_step");
  const Field noise = rng.normal_field(z_prev.shape());
  const Field y_noised = t_prev < 0 ? m.latent_observation
                                    : forward_noise(m.latent_observation, t_prev, noise, sched);
  return elementwise_blend(m.latent_mask, y_noised, z_prev);
}

namespace {

const Measurement& require_measurement(const SamplingContext& ctx, const char* who) {
  if (ctx.measurement == nullptr) {
    throw ValidationError(std::string(who) + " requires a measurement");
  }
  return *ctx.measurement;
}

Field subtract_scaled(const Field& base, double scale, const Field& direction) {
  Field out(base.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = base[i] - scale * direction[i];
  return out;
}

}  // namespace

double measurement_loss(const SamplingContext& ctx, const Field& z_t, int t) {
  const Measurement& m = require_measurement(ctx, "measurement_loss");
  const Field z0 = tweedie(z_t, ctx.predict_noise(z_t, t), t, ctx.schedule);
  double loss = 0.0;
  for (std::size_t i = 0; i < z0.size(); ++i) {
    const double r = m.latent_observation[i] - m.latent_mask[i] * z0[i];
    loss += r * r;
  }
  return loss;
}

Field measurement_gradient(const SamplingContext& ctx, const Field& z_t, int t,
                           const Field& z0_hat) {
  const Measurement& m = require_measurement(ctx, "measurement_gradient");
  // d/dz0 ||y - M z0||^2 = -2 M (y - M z0), pulled back through
  // z0 = (z - sqrt(1 - abar) eps(z)) / sqrt(abar).
  Field u(z0_hat.shape());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = -2.0 * m.latent_mask[i] * (m.latent_observation[i] - m.latent_mask[i] * z0_hat[i]);
  }
  const double abar = ctx.schedule.alpha_bar(t);
  const Field jt_u =
      epsilon_cfg_vjp(ctx.model, z_t, t, ctx.condition, ctx.guidance, ctx.schedule, u);
  const double noise_scale = std::sqrt(1.0 - abar);
  const double inv = 1.0 / std::sqrt(abar);
  Field grad(u.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = (u[i] - noise_scale * jt_u[i]) * inv;
  return grad;
}

Field mcg_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec,
               CounterRng& rng) {
  const Measurement& m = require_measurement(ctx, "mcg_step");
  const Field z_prev = ddim_advance(in.z0_hat, in.eps, in.t_prev, ctx.schedule);
  const Field grad = measurement_gradient(ctx, in.z_t, in.t, in.z0_hat);
  return repaint_step(subtract_scaled(z_prev, spec.gamma, grad), in.t_prev, m, ctx.schedule, rng);
}

Field dps_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec) {
  const Field z_prev = ddim_advance(in.z0_hat, in.eps, in.t_prev, ctx.schedule);
  const Field grad = measurement_gradient(ctx, in.z_t, in.t, in.z0_hat);
  return subtract_scaled(z_prev, spec.gamma, grad);
}

Field fig_step(const Field& z_prev, int t_prev, const Measurement& m, const SolverSpec& spec,
               const NoiseSchedule& sched, CounterRng& rng) {
  require_same_shape(z_prev, m.latent_mask, "fig_step");
  const Field noise = rng.normal_field(z_prev.shape());
  const Field y_noised = t_prev < 0 ? m.latent_observation
                                    : forward_noise(m.latent_observation, t_prev, noise, sched);
  // Closed-form gradient of ||y_{t-1} - M z||^2 in z: 2 M (M z - y_{t-1}).
  Field grad(z_prev.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double mk = m.latent_mask[i];
    grad[i] = 2.0 * mk * (mk * z_prev[i] - y_noised[i]);
  }
  return subtract_scaled(z_prev, spec.gamma, grad);
}

Field pixel_optimize(const Field& y, const Field& mask, const Field& anchor,
                     const PixelOptSpec& opt) {
  require_same_shape(y, mask, "pixel_optimize");
  require_same_shape(y, anchor, "pixel_optimize");
  require_binary(mask, "pixel_optimize");
  if (!(opt.lambda > 0.0)) throw ValidationError("pixel_optimize needs lambda > 0");
  const double lambda = opt.lambda;
  if (opt.closed_form) {
    Field x(y.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = mask[i] == 0.0 ? anchor[i] : (mask[i] * y[i] + lambda * anchor[i]) / (mask[i] + lambda);
    }
    return x;
  }
  Field x = elementwise_blend(mask, y, anchor);
  const double lr = opt.learning_rate;
  for (int it = 0; it < opt.iterations; ++it) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double g =
          -2.0 * mask[i] * (y[i] - mask[i] * x[i]) + 2.0 * lambda * (x[i] - anchor[i]);
      x[i] -= lr * g;
    }
  }
  return x;
}

double eta_beta(NoiseRule rule, int t, int t_prev, const NoiseSchedule& sched, double eta_scale) {
  const double abar = sched.alpha_bar(t);
  const double abar_prev = sched.alpha_bar(t_prev);
  const double base = rule == NoiseRule::dreamsampler ? std::sqrt(abar * (1.0 - abar_prev))
                                                      : std::sqrt(abar_prev * (1.0 - abar_prev));
  return eta_scale * base;
}

Field hybrid_noise(const Field& eps, int t, int t_prev, NoiseRule rule,
                   const NoiseSchedule& sched, CounterRng& rng, double eta_scale) {
  const double eb = eta_beta(rule, t, t_prev, sched, eta_scale);
  const double budget = 1.0 - sched.alpha_bar(t_prev);
  double radicand = budget - eb * eb;
  if (radicand < 0.0) {
    if (radicand < -1e-12) {
      throw ScheduleError("hybrid noise: (eta*beta_t)^2 = " + std::to_string(eb * eb) +
                              " exceeds 1 - alpha_bar_prev = " + std::to_string(budget) +
                              " at timestep " + std::to_string(t),
                          t);
    }
    radicand = 0.0;
  }
  if (eb == 0.0 || budget <= 0.0) return eps;
  const Field xi = rng.normal_field(eps.shape());
  const double denom = std::sqrt(budget);
  const double a = std::sqrt(radicand) / denom;
  const double b = eb / denom;
  Field out(eps.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * eps[i] + b * xi[i];
  return out;
}

Field dreamsampler_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec,
                        CounterRng& rng) {
  const Measurement& m = require_measurement(ctx, "dreamsampler_step");
  const NoiseSchedule& sched = ctx.schedule;
  const Field eps_null =
      ctx.condition.is_null()
          ? in.eps
          : ctx.model.epsilon(in.z_t, in.t, Condition::null_condition(), sched);
  const Field z0_null = ctx.condition.is_null() ? in.z0_hat : tweedie(in.z_t, eps_null, in.t, sched);
  const Field x_opt =
      pixel_optimize(m.observation, m.mask, ctx.codec.decode(z0_null), spec.pixel_opt);
  const Field z_y = ctx.codec.encode(x_opt);
  const double abar = sched.alpha_bar(in.t);
  const double abar_prev = sched.alpha_bar(in.t_prev);
  const Field interp = lerp(z0_null, z_y, abar_prev);
  // Outside the mask: abar_t * z0_hat + (1 - abar_t) * interp.
  const Field outside = lerp(interp, in.z0_hat, abar);
  const Field combined = elementwise_blend(m.latent_mask, interp, outside);
  const Field noise = hybrid_noise(in.eps, in.t, in.t_prev, spec.noise_rule(), sched, rng,
                                   spec.eta_scale);
  return ddim_advance(combined, noise, in.t_prev, sched);
}

Field treg_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec,
                CounterRng& rng) {
  const Measurement& m = require_measurement(ctx, "treg_step");
  const NoiseSchedule& sched = ctx.schedule;
  const Field x_opt =
      pixel_optimize(m.observation, m.mask, ctx.codec.decode(in.z0_hat), spec.pixel_opt);
  const Field z_y = ctx.codec.encode(x_opt);
  const Field interp = lerp(in.z0_hat, z_y, sched.alpha_bar(in.t_prev));
  const Field noise = hybrid_noise(in.eps, in.t, in.t_prev, spec.noise_rule(), sched, rng,
                                   spec.eta_scale);
  return ddim_advance(interp, noise, in.t_prev, sched);
}

ArtStepTrace art_step_traced(const SamplingContext& ctx, const StepInputs& in,
                             const SolverSpec& spec) {
  const Measurement& m = require_measurement(ctx, "art_step");
  if (!(spec.freq_cutoff >= 0.0 && spec.freq_cutoff <= 1.0)) {
    throw ValidationError("art_step: freq_cutoff must lie in [0,1]");
  }
  ArtStepTrace tr;
  // Hard measurement constraint in pixel space, then re-encode.
  tr.constrained_pixels = elementwise_blend(m.mask, m.observation, ctx.codec.decode(in.z0_hat));
  tr.constrained_latent = ctx.codec.encode(tr.constrained_pixels);
  // High-frequency correction: keep the low band of the re-encoded latent and
  // take the high band from the clean estimate.
  if (spec.frequency_correction) {
    const FrequencySplit constrained = radial_split(tr.constrained_latent, spec.freq_cutoff);
    const FrequencySplit estimate = radial_split(in.z0_hat, spec.freq_cutoff);
    tr.corrected_latent = constrained.low + estimate.high;
  } else {
    tr.corrected_latent = tr.constrained_latent;
  }
  // Data consistency inside the latent mask; the clean estimate elsewhere.
  const double weight = spec.data_consistency ? ctx.schedule.alpha_bar(in.t_prev) : 1.0;
  tr.blended_latent =
      elementwise_blend(m.latent_mask, lerp(in.z0_hat, tr.corrected_latent, weight), in.z0_hat);
  tr.next = ddim_advance(tr.blended_latent, in.eps, in.t_prev, ctx.schedule);
  return tr;
}

Field art_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec) {
  return art_step_traced(ctx, in, spec).next;
}

Field guided_step(const SamplingContext& ctx, const StepInputs& in, const SolverSpec& spec,
                  CounterRng& rng) {
  switch (spec.kind) {
    case SolverKind::none:
    case SolverKind::posthoc_only:
      return ddim_step(in.z_t, in.eps, in.t, in.t_prev, ctx.schedule);
    case SolverKind::repaint: {
      const Field z_prev = ddim_advance(in.z0_hat, in.eps, in.t_prev, ctx.schedule);
      return repaint_step(z_prev, in.t_prev, require_measurement(ctx, "repaint_step"),
                          ctx.schedule, rng);
    }
    case SolverKind::mcg: return mcg_step(ctx, in, spec, rng);
    case SolverKind::dps: return dps_step(ctx, in, spec);
    case SolverKind::fig: {
      const Field z_prev = ddim_advance(in.z0_hat, in.eps, in.t_prev, ctx.schedule);
      return fig_step(z_prev, in.t_prev, require_measurement(ctx, "fig_step"), spec,
                      ctx.schedule, rng);
    }
    case SolverKind::dreamsampler: return dreamsampler_step(ctx, in, spec, rng);
    case SolverKind::treg: return treg_step(ctx, in, spec, rng);
    case SolverKind::art: return art_step(ctx, in, spec);
  }
  throw ValidationError("unhandled solver kind");
}

}  // namespace artlab
