#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "artlab/codec.hpp"
#include "artlab/error.hpp"
#include "artlab/manifest.hpp"
#include "artlab/measurement.hpp"
#include "artlab/sampler.hpp"
#include "artlab/schedule.hpp"
#include "artlab/score.hpp"
#include "artlab/solver.hpp"

namespace artlab {

/// Validation failure of an experiment config; every issue names its key.
class ConfigError : public ValidationError {
 public:
  struct Issue {
    std::string key;
    std::string message;
  };
  explicit ConfigError(std::vector<Issue> issues);
  ConfigError(const std::string& key, const std::string& message)
      : ConfigError(std::vector<Issue>{{key, message}}) {}
  const std::vector<Issue>& issues() const noexcept { return issues_; }
  nlohmann::json report() const;

 private:
  std::vector<Issue> issues_;
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::scaled_linear;
  int T = 1000;
  double beta_start = 8.5e-4;
  double beta_end = 1.2e-2;

  NoiseSchedule build() const { return NoiseSchedule::make(kind, T, beta_start, beta_end); }
};

struct PlanSpec {
  int steps = 50;
  int start = 999;
  int stride = 0;
};

struct MetricSpec {
  double peak = 1.0;
  int ssim_window = 7;
  int boundary_band = 1;
};

/// One row of a comparison: a solver plus optional per-row overrides.
struct VariantSpec {
  SolverSpec solver;
  std::optional<InitStrategy> init;
  std::optional<int> plan_start;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  int trials = 1;
  unsigned threads = 1;
  Shape pixel_shape{1, 32, 32};
  ScheduleSpec schedule{};
  PlanSpec plan{};
  Codec codec = Codec::identity();
  InitStrategy init{};
  GuidanceSpec guidance{};
  std::optional<std::string> condition;
  nlohmann::json prior;
  nlohmann::json truth;
  nlohmann::json mask;
  double noise_std = 0.0;
  std::vector<VariantSpec> variants;
  MetricSpec metrics{};
  std::string output_dir = "out";

  /// The document this config was parsed from, echoed into the manifest.
  nlohmann::json source;
};

/// Parses and validates a config document; throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json solver_to_json(const SolverSpec& spec);

/// Score model described by config.prior at latent resolution.
std::unique_ptr<MixtureScoreModel> build_model(const ExperimentConfig& cfg);
/// Ground-truth pixel field for a trial.
Field build_truth(const ExperimentConfig& cfg, const MixtureScoreModel& model, int trial);
Field build_mask(const ExperimentConfig& cfg);

struct MetricsRow {
  int trial = 0;
  std::string solver;
  std::string kind;
  std::string init;
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> boundary_score;
  std::optional<double> posterior_error;
  double measurement_residual = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "trial,solver,kind,init,psnr,ssim,boundary_score,posterior_error,measurement_residual";

std::string format_metrics_csv(const std::vector<MetricsRow>& rows);

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<unsigned> threads;
  std::optional<std::string> output_dir;
};

struct ResultManifest {
  nlohmann::json config;
  std::vector<MetricsRow> rows;
  std::vector<FileEntry> files;
  std::filesystem::path output_dir;

  nlohmann::json to_json() const;
};

/// Runs every trial x variant, writes dumps, heatmaps, metrics.csv and finally
/// manifest.json into the output directory.
ResultManifest run_experiment(ExperimentConfig cfg, const RunOverrides& overrides = {});

struct SolverSummary {
  std::string manifest;
  std::string solver;
  std::size_t rows = 0;
  double median_psnr = 0.0;
  double median_ssim = 0.0;
  std::optional<double> median_boundary_score;
  std::optional<double> median_posterior_error;
  double max_measurement_residual = 0.0;
};

/// Verifies each manifest, then summarizes its rows per solver.
std::vector<SolverSummary> compare_manifests(const std::vector<std::filesystem::path>& manifests);
std::string format_summary(const std::vector<SolverSummary>& rows);

/// Renders a raw dump to PGM/PPM; range defaults to the data min/max.
void render_dump(const std::filesystem::path& dump, const std::filesystem::path& out,
                 std::optional<double> lo = {}, std::optional<double> hi = {});

}  // namespace artlab
