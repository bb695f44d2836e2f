#include "artlab/schedule.hpp"

#include <cmath>

#include "artlab/error.hpp"

namespace artlab {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::linear: return "linear";
    case ScheduleKind::scaled_linear: return "scaled_linear";
    case ScheduleKind::tabulated: return "tabulated";
  }
  return "unknown";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "constant") return ScheduleKind::constant;
  if (name == "linear") return ScheduleKind::linear;
  if (name == "scaled_linear") return ScheduleKind::scaled_linear;
  throw ValidationError("unknown schedule kind '" + name + "'");
}

NoiseSchedule NoiseSchedule::make(ScheduleKind kind, int T, double beta_start, double beta_end) {
  if (T < 2) throw ValidationError("schedule needs T >= 2, got " + std::to_string(T));
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ValidationError("schedule needs 0 < beta_start <= beta_end < 1");
  }
  if (kind == ScheduleKind::tabulated) {
    throw ValidationError("tabulated schedules are built with from_alpha_bar");
  }
  NoiseSchedule s;
  s.kind_ = kind;
  s.beta_start_ = beta_start;
  s.beta_end_ = beta_end;
  s.beta_.resize(T);
  for (int t = 0; t < T; ++t) {
    const double u = static_cast<double>(t) / (T - 1);
    switch (kind) {
      case ScheduleKind::constant: s.beta_[t] = beta_start; break;
      case ScheduleKind::linear: s.beta_[t] = beta_start + u * (beta_end - beta_start); break;
      case ScheduleKind::scaled_linear: {
        const double r = std::sqrt(beta_start) + u * (std::sqrt(beta_end) - std::sqrt(beta_start));
        s.beta_[t] = r * r;
        break;
      }
      case ScheduleKind::tabulated: break;
    }
  }
  s.alpha_bar_.resize(T);
  double running = 1.0;
  for (int t = 0; t < T; ++t) {
    running *= 1.0 - s.beta_[t];
    s.alpha_bar_[t] = running;
  }
  s.derive_tables();
  return s;
}

NoiseSchedule NoiseSchedule::from_alpha_bar(std::vector<double> alpha_bar) {
  if (alpha_bar.empty()) throw ValidationError("tabulated schedule needs at least one entry");
  for (std::size_t t = 0; t < alpha_bar.size(); ++t) {
    if (!(alpha_bar[t] >= 0.0 && alpha_bar[t] <= 1.0)) {
      throw ValidationError("tabulated alpha_bar must lie in [0,1]");
    }
    if (t > 0 && alpha_bar[t] > alpha_bar[t - 1]) {
      throw ValidationError("tabulated alpha_bar must be non-increasing");
    }
  }
  NoiseSchedule s;
  s.kind_ = ScheduleKind::tabulated;
  s.alpha_bar_ = std::move(alpha_bar);
  s.beta_.resize(s.alpha_bar_.size());
  for (std::size_t t = 0; t < s.alpha_bar_.size(); ++t) {
    const double prev = t == 0 ? 1.0 : s.alpha_bar_[t - 1];
    s.beta_[t] = prev > 0.0 ? 1.0 - s.alpha_bar_[t] / prev : 1.0;
  }
  s.derive_tables();
  return s;
}

void NoiseSchedule::derive_tables() {
  const int T = num_steps();
  alpha_.resize(T);
  posterior_var_.resize(T);
  for (int t = 0; t < T; ++t) {
    alpha_[t] = 1.0 - beta_[t];
    const double prev = t == 0 ? 1.0 : alpha_bar_[t - 1];
    const double denom = 1.0 - alpha_bar_[t];
    posterior_var_[t] = (t == 0 || denom <= 0.0) ? 0.0 : (1.0 - prev) / denom * beta_[t];
  }
}

void NoiseSchedule::check_timestep(int t, bool allow_clean_endpoint) const {
  const int lo = allow_clean_endpoint ? -1 : 0;
  if (t < lo || t >= num_steps()) {
    throw ValidationError("timestep " + std::to_string(t) + " outside [" + std::to_string(lo) +
                          ", " + std::to_string(num_steps() - 1) + "]");
  }
}

double NoiseSchedule::beta(int t) const {
  check_timestep(t);
  return beta_[t];
}

double NoiseSchedule::alpha(int t) const {
  check_timestep(t);
  return alpha_[t];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_timestep(t, true);
  return t < 0 ? 1.0 : alpha_bar_[t];
}

double NoiseSchedule::posterior_variance(int t) const {
  check_timestep(t);
  return posterior_var_[t];
}

Field forward_noise(const Field& x0, int t, const Field& noise, const NoiseSchedule& sched) {
  require_same_shape(x0, noise, "forward_noise");
  const double abar = sched.alpha_bar(t);
  if (t < 0) throw ValidationError("forward_noise needs t >= 0");
  const double a = std::sqrt(abar);
  const double b = std::sqrt(1.0 - abar);
  Field out(x0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * noise[i];
  return out;
}

void TimestepPlan::validate(const NoiseSchedule& sched) const {
  if (timesteps.empty()) throw ValidationError("timestep plan is empty");
  for (std::size_t i = 0; i < timesteps.size(); ++i) {
    sched.check_timestep(timesteps[i]);
    if (i > 0 && timesteps[i] >= timesteps[i - 1]) {
      throw ValidationError("timestep plan must be strictly decreasing");
    }
  }
}

TimestepPlan make_plan(const NoiseSchedule& sched, int steps, int start, int stride) {
  if (steps < 1) throw ValidationError("plan needs at least one step");
  sched.check_timestep(start);
  if (stride == 0) stride = sched.num_steps() / steps;
  if (stride < 1) throw ValidationError("plan stride must be >= 1");
  TimestepPlan plan;
  for (int i = 0; i < steps; ++i) plan.timesteps.push_back(start - i * stride);
  if (plan.timesteps.back() < 0) {
    throw ValidationError("plan with " + std::to_string(steps) + " steps of stride " +
                          std::to_string(stride) + " from " + std::to_string(start) +
                          " runs below timestep 0");
  }
  plan.validate(sched);
  return plan;
}

}  // namespace artlab
