#pragma once

#include <string>
#include <vector>

#include "artlab/field.hpp"

namespace artlab {

enum class ScheduleKind { constant, linear, scaled_linear, tabulated };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

/// Discrete-time noise tables indexed 0..T-1. Timestep -1 denotes the clean
/// endpoint with alpha_bar = 1, used as the target of the last sampling step.
class NoiseSchedule {
 public:
  /// Requires 0 < beta_start <= beta_end < 1 and T >= 2.
  static NoiseSchedule make(ScheduleKind kind, int T, double beta_start, double beta_end);

  /// Schedule given directly by its cumulative table. Entries must lie in
  /// [0, 1] and be non-increasing; intended for hand-checkable test setups,
  /// so the strict make() invariants are not enforced.
  static NoiseSchedule from_alpha_bar(std::vector<double> alpha_bar);

  ScheduleKind kind() const noexcept { return kind_; }
  int num_steps() const noexcept { return static_cast<int>(alpha_bar_.size()); }
  double beta_start() const noexcept { return beta_start_; }
  double beta_end() const noexcept { return beta_end_; }

  double beta(int t) const;
  double alpha(int t) const;
  /// alpha_bar(-1) == 1.
  double alpha_bar(int t) const;
  /// Posterior variance ((1 - abar_{t-1}) / (1 - abar_t)) * beta_t; 0 at t = 0.
  double posterior_variance(int t) const;

  const std::vector<double>& betas() const noexcept { return beta_; }
  const std::vector<double>& alpha_bars() const noexcept { return alpha_bar_; }

  void check_timestep(int t, bool allow_clean_endpoint = false) const;

 private:
  NoiseSchedule() = default;
  void derive_tables();

  ScheduleKind kind_ = ScheduleKind::tabulated;
  double beta_start_ = 0.0;
  double beta_end_ = 0.0;
  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
  std::vector<double> posterior_var_;
};

/// sqrt(abar_t) * x0 + sqrt(1 - abar_t) * noise.
Field forward_noise(const Field& x0, int t, const Field& noise, const NoiseSchedule& sched);

/// Ordered inference timesteps, strictly decreasing; the step from
/// timesteps[i] lands on timesteps[i + 1], and the last step on -1.
struct TimestepPlan {
  std::vector<int> timesteps;

  std::size_t size() const noexcept { return timesteps.size(); }
  int start_index() const { return timesteps.front(); }
  int current(std::size_t i) const { return timesteps.at(i); }
  int previous(std::size_t i) const { return i + 1 < timesteps.size() ? timesteps[i + 1] : -1; }

  void validate(const NoiseSchedule& sched) const;
};

/// `steps` timesteps start, start - stride, ...; stride defaults to T / steps
/// (20 for T = 1000 and 50 steps, giving 999, 979, ..., 19 or 981, ..., 1).
TimestepPlan make_plan(const NoiseSchedule& sched, int steps, int start, int stride = 0);

}  // namespace artlab
