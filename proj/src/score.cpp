#include "artlab/score.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "artlab/error.hpp"

namespace artlab {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(const Field& f) {
  return {f.values().data(), static_cast<Eigen::Index>(f.size())};
}

Field to_field(const Shape& shape, const Eigen::VectorXd& v) {
  return Field(shape, std::vector<double>(v.data(), v.data() + v.size()));
}

double dot(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

GaussianPrior GaussianPrior::isotropic(Field mean, double variance) {
  Field var(mean.shape(), variance);
  return diagonal(std::move(mean), std::move(var));
}

GaussianPrior GaussianPrior::diagonal(Field mean, Field variance) {
  require_same_shape(mean, variance, "GaussianPrior::diagonal");
  for (double v : variance.values()) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError("prior variances must be positive and finite");
    }
  }
  GaussianPrior p;
  p.mean_ = std::move(mean);
  p.variance_ = std::move(variance);
  return p;
}

GaussianPrior GaussianPrior::dense(Field mean, const Eigen::MatrixXd& covariance) {
  const auto n = static_cast<Eigen::Index>(mean.size());
  if (mean.size() > kDenseCovarianceCap) {
    throw ValidationError("dense covariance priors are limited to " +
                          std::to_string(kDenseCovarianceCap) + " elements, field has " +
                          std::to_string(mean.size()));
  }
  if (covariance.rows() != n || covariance.cols() != n) {
    throw DimensionError("covariance must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  const double asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, covariance.cwiseAbs().maxCoeff())) {
    throw ValidationError("covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw ValidationError("covariance must be positive definite");
  }
  GaussianPrior p;
  p.mean_ = std::move(mean);
  p.dense_ = true;
  p.covariance_ = covariance;
  p.eigenvectors_ = eig.eigenvectors();
  p.eigenvalues_ = eig.eigenvalues();
  return p;
}

Field GaussianPrior::marginal_variance() const {
  if (!dense_) return variance_;
  Field out(shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = covariance_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
  }
  return out;
}

Eigen::MatrixXd GaussianPrior::covariance() const {
  if (dense_) return covariance_;
  return as_vector(variance_).asDiagonal();
}

Field GaussianPrior::noised_precision_apply(const Field& v, double abar) const {
  require_same_shape(v, mean_, "noised_precision_apply");
  if (!dense_) {
    Field out(v.shape());
    for (std::size_t i = 0; i < v.size(); ++i) {
      out[i] = v[i] / (abar * variance_[i] + (1.0 - abar));
    }
    return out;
  }
  Eigen::VectorXd coeffs = eigenvectors_.transpose() * as_vector(v);
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
    coeffs[k] /= abar * eigenvalues_[k] + (1.0 - abar);
  }
  return to_field(v.shape(), eigenvectors_ * coeffs);
}

double GaussianPrior::noised_log_density(const Field& z, double abar) const {
  require_same_shape(z, mean_, "noised_log_density");
  const double sa = std::sqrt(abar);
  Field r(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) r[i] = z[i] - sa * mean_[i];
  double log_det = 0.0;
  if (dense_) {
    for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) {
      log_det += std::log(abar * eigenvalues_[k] + (1.0 - abar));
    }
  } else {
    for (double v : variance_.values()) log_det += std::log(abar * v + (1.0 - abar));
  }
  const double quad = dot(r, noised_precision_apply(r, abar));
  const double n = static_cast<double>(z.size());
  return -0.5 * (quad + log_det + n * std::log(2.0 * std::numbers::pi));
}

Field GaussianPrior::sample(CounterRng& rng) const {
  Field xi = rng.normal_field(shape());
  Field out = mean_;
  if (!dense_) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::sqrt(variance_[i]) * xi[i];
    return out;
  }
  Eigen::VectorXd scaled = as_vector(xi).cwiseProduct(eigenvalues_.cwiseSqrt());
  const Eigen::VectorXd draw = eigenvectors_ * scaled;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += draw[static_cast<Eigen::Index>(i)];
  return out;
}

Eigen::MatrixXd squared_exponential_covariance(const Shape& shape, double amplitude,
                                               double length_scale, double nugget) {
  if (!(amplitude > 0.0 && length_scale > 0.0 && nugget >= 0.0)) {
    throw ValidationError("squared-exponential kernel needs amplitude > 0, length_scale > 0, "
                          "nugget >= 0");
  }
  const auto n = static_cast<Eigen::Index>(shape.size());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  const auto plane = static_cast<Eigen::Index>(shape.plane_size());
  const double a2 = amplitude * amplitude;
  for (int c = 0; c < shape.channels; ++c) {
    for (Eigen::Index i = 0; i < plane; ++i) {
      for (Eigen::Index j = 0; j < plane; ++j) {
        const double dy = static_cast<double>(i / shape.width - j / shape.width);
        const double dx = static_cast<double>(i % shape.width - j % shape.width);
        const double d2 = dy * dy + dx * dx;
        k(c * plane + i, c * plane + j) =
            a2 * std::exp(-d2 / (2.0 * length_scale * length_scale)) + (i == j ? nugget : 0.0);
      }
    }
  }
  return k;
}

Field masked_conditional_mean(const GaussianPrior& prior, const Field& mask, const Field& y) {
  require_same_shape(mask, prior.mean(), "masked_conditional_mean");
  require_same_shape(y, prior.mean(), "masked_conditional_mean");
  require_binary(mask, "masked_conditional_mean");
  std::vector<Eigen::Index> observed;
  std::vector<Eigen::Index> hidden;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    (mask[i] == 1.0 ? observed : hidden).push_back(static_cast<Eigen::Index>(i));
  }
  Field out = prior.mean();
  for (auto i : observed) out[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)];
  if (observed.empty() || hidden.empty()) return out;
  if (!prior.is_dense()) return out;  // independent coordinates

  const Eigen::MatrixXd cov = prior.covariance();
  Eigen::MatrixXd s_oo(observed.size(), observed.size());
  Eigen::MatrixXd s_ho(hidden.size(), observed.size());
  Eigen::VectorXd resid(observed.size());
  for (std::size_t a = 0; a < observed.size(); ++a) {
    resid[a] = y[observed[a]] - prior.mean()[observed[a]];
    for (std::size_t b = 0; b < observed.size(); ++b) s_oo(a, b) = cov(observed[a], observed[b]);
    for (std::size_t h = 0; h < hidden.size(); ++h) s_ho(h, a) = cov(hidden[h], observed[a]);
  }
  const Eigen::VectorXd shift = s_ho * s_oo.llt().solve(resid);
  for (std::size_t h = 0; h < hidden.size(); ++h) out[hidden[h]] += shift[h];
  return out;
}

void GuidanceSpec::validate() const {
  if (!std::isfinite(cfg_scale) || cfg_scale < 0.0) {
    throw ValidationError("cfg_scale must be finite and >= 0");
  }
}

// ---------------------------------------------------------------------------

MixtureScoreModel::MixtureScoreModel(std::vector<Component> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ValidationError("mixture needs at least one component");
  double total = 0.0;
  for (const auto& comp : components_) {
    if (!(comp.weight > 0.0)) throw ValidationError("mixture weights must be positive");
    if (comp.prior.shape() != components_.front().prior.shape()) {
      throw DimensionError("mixture components must share a shape");
    }
    total += comp.weight;
    for (const auto& other : components_) {
      if (&other != &comp && other.label == comp.label) {
        throw ValidationError("duplicate mixture component label '" + comp.label + "'");
      }
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("mixture weights must sum to 1, got " + std::to_string(total));
  }
}

Condition MixtureScoreModel::condition(const std::string& label) const {
  for (std::size_t k = 0; k < components_.size(); ++k) {
    if (components_[k].label == label) return Condition::of(k);
  }
  throw ValidationError("unknown condition label '" + label + "'");
}

void MixtureScoreModel::validate_condition(const Condition& c) const {
  if (c.component && *c.component >= components_.size()) {
    throw ValidationError("unknown condition index " + std::to_string(*c.component));
  }
}

std::vector<std::size_t> MixtureScoreModel::active(const Condition& c) const {
  validate_condition(c);
  if (c.component) return {*c.component};
  std::vector<std::size_t> all(components_.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return all;
}

std::vector<double> MixtureScoreModel::responsibilities(const Field& z, double abar,
                                                        const Condition& c) const {
  const auto ks = active(c);
  std::vector<double> logw(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const auto& comp = components_[ks[i]];
    logw[i] = std::log(comp.weight) + comp.prior.noised_log_density(z, abar);
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - top);
    total += w;
  }
  for (double& w : logw) w /= total;
  return logw;
}

namespace {

// Per-component score -P_k (z - sqrt(abar) mu_k).
Field component_score(const GaussianPrior& prior, const Field& z, double abar) {
  const double sa = std::sqrt(abar);
  Field r(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) r[i] = sa * prior.mean()[i] - z[i];
  return prior.noised_precision_apply(r, abar);
}

}  // namespace

Field MixtureScoreModel::epsilon(const Field& z, int t, const Condition& c,
                                 const NoiseSchedule& sched) const {
  if (z.shape() != shape()) throw DimensionError("epsilon: latent shape mismatch");
  const double abar = sched.alpha_bar(t);
  const double sigma = std::sqrt(1.0 - abar);
  const auto ks = active(c);
  if (ks.size() == 1) return -sigma * component_score(components_[ks[0]].prior, z, abar);
  const auto resp = responsibilities(z, abar, c);
  Field score(z.shape());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    score += resp[i] * component_score(components_[ks[i]].prior, z, abar);
  }
  return -sigma * score;
}

Field MixtureScoreModel::epsilon_vjp(const Field& z, int t, const Condition& c,
                                     const NoiseSchedule& sched, const Field& v) const {
  if (z.shape() != shape()) throw DimensionError("epsilon_vjp: latent shape mismatch");
  require_same_shape(z, v, "epsilon_vjp");
  const double abar = sched.alpha_bar(t);
  const double sigma = std::sqrt(1.0 - abar);
  const auto ks = active(c);
  // Hessian of log p_t (symmetric):
  //   H v = -sum_k r_k P_k v + sum_k r_k s_k (s_k . v) - s (s . v)
  if (ks.size() == 1) {
    return sigma * components_[ks[0]].prior.noised_precision_apply(v, abar);
  }
  const auto resp = responsibilities(z, abar, c);
  Field hv(z.shape());
  Field s(z.shape());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const auto& prior = components_[ks[i]].prior;
    const Field sk = component_score(prior, z, abar);
    hv -= resp[i] * prior.noised_precision_apply(v, abar);
    hv += (resp[i] * dot(sk, v)) * sk;
    s += resp[i] * sk;
  }
  hv -= dot(s, v) * s;
  return -sigma * hv;
}

Field epsilon_cfg(const ScoreModel& model, const Field& z, int t, const Condition& c,
                  const GuidanceSpec& guidance, const NoiseSchedule& sched) {
  guidance.validate();
  model.validate_condition(c);
  if (guidance.cfg_scale == 1.0 || c.is_null()) return model.epsilon(z, t, c, sched);
  const Field uncond = model.epsilon(z, t, Condition::null_condition(), sched);
  if (guidance.cfg_scale == 0.0) return uncond;
  const Field cond = model.epsilon(z, t, c, sched);
  return lerp(uncond, cond, guidance.cfg_scale);
}

Field epsilon_cfg_vjp(const ScoreModel& model, const Field& z, int t, const Condition& c,
                      const GuidanceSpec& guidance, const NoiseSchedule& sched, const Field& v) {
  guidance.validate();
  model.validate_condition(c);
  if (guidance.cfg_scale == 1.0 || c.is_null()) return model.epsilon_vjp(z, t, c, sched, v);
  const Field uncond = model.epsilon_vjp(z, t, Condition::null_condition(), sched, v);
  if (guidance.cfg_scale == 0.0) return uncond;
  return lerp(uncond, model.epsilon_vjp(z, t, c, sched, v), guidance.cfg_scale);
}

}  // namespace artlab
