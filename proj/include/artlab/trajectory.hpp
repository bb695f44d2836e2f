#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "artlab/field.hpp"
#include "artlab/measurement.hpp"
#include "artlab/metrics.hpp"
#include "artlab/rng.hpp"
#include "artlab/sampler.hpp"
#include "artlab/schedule.hpp"
#include "artlab/solver.hpp"

namespace artlab {

struct StepRecord {
  int t = 0;
  bool guided = false;
  /// Latent at timestep t (the step input).
  Field z;
  /// Clean estimate at t; empty for the init record.
  std::optional<Field> z0_hat;
  /// Max |D(z0_hat) - y| over the measurement region.
  std::optional<double> measurement_residual;
  /// boundary_score of D(z0_hat) when the mask has a boundary.
  std::optional<double> boundary_score;
};

struct TrajectoryLog {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  /// records[0] is the init record (t = plan start, z = z_T); then one record
  /// per plan step.
  std::vector<StepRecord> records;
  /// Latent after the last step (its clean endpoint, alpha_bar = 1).
  Field final_latent;
};

struct TrajectoryOptions {
  /// Keep per-step latents; diagnostics are always recorded.
  bool record_latents = true;
  int boundary_band = 1;
};

/// Runs init, then every plan step: a plain DDIM step when the solver is
/// unguided or the step is a periodic standard-denoising step, the solver's
/// guided step otherwise.
TrajectoryLog run_trajectory(const TimestepPlan& plan, const InitStrategy& init,
                             const SolverSpec& spec, const SamplingContext& ctx, CounterRng& rng,
                             const TrajectoryOptions& options = {});

struct FinalOutput {
  Field raw;       // D(final latent)
  Field replaced;  // posthoc_replace(raw) when a measurement exists, else raw
  Field output;    // the variant selected by the solver spec
};

FinalOutput finalize(const TrajectoryLog& log, const Measurement* m, const SolverSpec& spec,
                     const Codec& codec);

/// Independent trajectories for streams 0..count-1 of `seed`, executed on up
/// to `threads` workers; results are ordered by stream index.
std::vector<TrajectoryLog> run_batch(const TimestepPlan& plan, const InitStrategy& init,
                                     const SolverSpec& spec, const SamplingContext& ctx,
                                     std::uint64_t seed, std::size_t count, unsigned threads = 1,
                                     const TrajectoryOptions& options = {});

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Exceptions from
/// workers are rethrown (first by index) after all workers join.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace artlab
