#include "artlab/trajectory.hpp"

#include <atomic>
#include <exception>
#include <functional>
#include <thread>

#include "artlab/error.hpp"

namespace artlab {

TrajectoryLog run_trajectory(const TimestepPlan& plan, const InitStrategy& init,
                             const SolverSpec& spec, const SamplingContext& ctx, CounterRng& rng,
                             const TrajectoryOptions& options) {
  plan.validate(ctx.schedule);
  spec.validate_against(plan, ctx.schedule);
  if (spec.guides() && ctx.measurement == nullptr) {
    throw ValidationError("solver '" + spec.display_name() + "' requires a measurement");
  }
  const Measurement* m = ctx.measurement;
  std::optional<BoundaryRegions> regions;
  if (m != nullptr) {
    try {
      regions = BoundaryRegions(m->mask, options.boundary_band);
    } catch (const UndefinedScoreError&) {
      regions.reset();
    }
  }

  TrajectoryLog log;
  log.seed = rng.seed();
  log.stream = rng.stream();
  Field z = initialize(init, ctx, rng);
  log.records.push_back({plan.start_index(), false, options.record_latents ? z : Field{}, {}, {}, {}});

  for (std::size_t i = 0; i < plan.size(); ++i) {
    const int t = plan.current(i);
    const int t_prev = plan.previous(i);
    const Field eps = ctx.predict_noise(z, t);
    const Field z0_hat = tweedie(z, eps, t, ctx.schedule);

    StepRecord rec;
    rec.t = t;
    rec.guided = !spec.is_standard_step(i, plan.size());
    if (m != nullptr) {
      const Field decoded = ctx.codec.decode(z0_hat);
      rec.measurement_residual = measurement_residual(decoded, *m);
      if (regions) rec.boundary_score = regions->score(decoded);
    }

    Field next = rec.guided ? guided_step(ctx, StepInputs{z, t, t_prev, eps, z0_hat}, spec, rng)
                            : ddim_advance(z0_hat, eps, t_prev, ctx.schedule);
    if (!all_finite(next)) {
      throw NumericalError("solver '" + spec.display_name() +
                           "' produced a non-finite latent at timestep " + std::to_string(t));
    }
    if (options.record_latents) {
      rec.z = std::move(z);
      rec.z0_hat = z0_hat;
    }
    log.records.push_back(std::move(rec));
    z = std::move(next);
  }
  log.final_latent = std::move(z);
  return log;
}

FinalOutput finalize(const TrajectoryLog& log, const Measurement* m, const SolverSpec& spec,
                     const Codec& codec) {
  FinalOutput out;
  out.raw = codec.decode(log.final_latent);
  out.replaced = m != nullptr ? posthoc_replace(out.raw, *m) : out.raw;
  const bool replace = spec.finalize_posthoc || spec.kind == SolverKind::posthoc_only;
  out.output = replace ? out.replaced : out.raw;
  return out;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<TrajectoryLog> run_batch(const TimestepPlan& plan, const InitStrategy& init,
                                     const SolverSpec& spec, const SamplingContext& ctx,
                                     std::uint64_t seed, std::size_t count, unsigned threads,
                                     const TrajectoryOptions& options) {
  std::vector<TrajectoryLog> logs(count);
  parallel_for(count, threads, [&](std::size_t i) {
    CounterRng rng(seed, i);
    logs[i] = run_trajectory(plan, init, spec, ctx, rng, options);
  });
  return logs;
}

}  // namespace artlab
