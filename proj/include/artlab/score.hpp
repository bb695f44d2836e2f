#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "artlab/field.hpp"
#include "artlab/rng.hpp"
#include "artlab/schedule.hpp"

namespace artlab {

/// Dense covariances are limited to fields of at most this many elements.
inline constexpr std::size_t kDenseCovarianceCap = 256;

/// Gaussian data distribution over a Field, diagonal or dense covariance.
///
/// A dense covariance is eigendecomposed once on construction, so the noised
/// precision (abar * Sigma + (1 - abar) * I)^-1 is available at every timestep
/// for the price of two matrix-vector products.
class GaussianPrior {
 public:
  static GaussianPrior isotropic(Field mean, double variance);
  static GaussianPrior diagonal(Field mean, Field variance);
  static GaussianPrior dense(Field mean, const Eigen::MatrixXd& covariance);

  bool is_dense() const noexcept { return dense_; }
  const Field& mean() const noexcept { return mean_; }
  const Shape& shape() const noexcept { return mean_.shape(); }

  /// Per-element marginal variance.
  Field marginal_variance() const;
  /// Full covariance matrix over flattened coordinates.
  Eigen::MatrixXd covariance() const;

  /// (abar * Sigma + (1 - abar) * I)^-1 v
  Field noised_precision_apply(const Field& v, double abar) const;
  /// log N(z; sqrt(abar) mu, abar * Sigma + (1 - abar) I)
  double noised_log_density(const Field& z, double abar) const;

  Field sample(CounterRng& rng) const;

 private:
  GaussianPrior() = default;

  Field mean_;
  bool dense_ = false;
  Field variance_;  // diagonal mode
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd eigenvectors_;
  Eigen::VectorXd eigenvalues_;
};

/// Block-diagonal (per channel) squared-exponential covariance
/// amplitude^2 * exp(-d^2 / (2 l^2)) + nugget * I over pixel positions.
Eigen::MatrixXd squared_exponential_covariance(const Shape& shape, double amplitude,
                                               double length_scale, double nugget);

/// Exact E[x | x_i = y_i for mask_i = 1] under the prior; observed entries are
/// returned as y.
Field masked_conditional_mean(const GaussianPrior& prior, const Field& mask, const Field& y);

/// A conditioning input: a component index, or the null condition.
struct Condition {
  std::optional<std::size_t> component;

  static Condition null_condition() { return {}; }
  static Condition of(std::size_t k) { return {k}; }
  bool is_null() const noexcept { return !component.has_value(); }
  bool operator==(const Condition&) const = default;
};

struct GuidanceSpec {
  double cfg_scale = 1.0;
  void validate() const;
};

/// Noise predictor eps(z_t, t, c).
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual Shape shape() const = 0;
  /// Throws ValidationError for labels outside the vocabulary.
  virtual void validate_condition(const Condition& c) const = 0;
  virtual Field epsilon(const Field& z, int t, const Condition& c,
                        const NoiseSchedule& sched) const = 0;
  /// (d eps / d z)^T v at z.
  virtual Field epsilon_vjp(const Field& z, int t, const Condition& c, const NoiseSchedule& sched,
                            const Field& v) const = 0;
};

/// Exact noise predictor of a Gaussian mixture. Condition k selects component
/// k alone; the null condition uses the full mixture.
class MixtureScoreModel final : public ScoreModel {
 public:
  struct Component {
    std::string label;
    double weight = 1.0;
    GaussianPrior prior;
  };

  explicit MixtureScoreModel(std::vector<Component> components);

  const std::vector<Component>& components() const noexcept { return components_; }
  /// Condition for a component label; throws ValidationError if unknown.
  Condition condition(const std::string& label) const;

  Shape shape() const override { return components_.front().prior.shape(); }
  void validate_condition(const Condition& c) const override;
  Field epsilon(const Field& z, int t, const Condition& c,
                const NoiseSchedule& sched) const override;
  Field epsilon_vjp(const Field& z, int t, const Condition& c, const NoiseSchedule& sched,
                    const Field& v) const override;

  /// Responsibilities of the active components at (z, abar), normalized.
  std::vector<double> responsibilities(const Field& z, double abar, const Condition& c) const;

 private:
  std::vector<std::size_t> active(const Condition& c) const;

  std::vector<Component> components_;
};

Field epsilon_cfg(const ScoreModel& model, const Field& z, int t, const Condition& c,
                  const GuidanceSpec& guidance, const NoiseSchedule& sched);
Field epsilon_cfg_vjp(const ScoreModel& model, const Field& z, int t, const Condition& c,
                      const GuidanceSpec& guidance, const NoiseSchedule& sched, const Field& v);

}  // namespace artlab
