#include "artlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "artlab/field_io.hpp"
#include "artlab/metrics.hpp"
#include "artlab/patterns.hpp"
#include "artlab/trajectory.hpp"

namespace artlab {

namespace {

using nlohmann::json;
using Issues = std::vector<ConfigError::Issue>;

std::string join_issues(const std::vector<ConfigError::Issue>& issues) {
  std::string out = "invalid config";
  for (const auto& i : issues) out += "\n  " + i.key + ": " + i.message;
  return out;
}

std::string type_name(const json& j) { return j.type_name(); }

/// Typed access to one JSON object that records problems instead of throwing.
class Reader {
 public:
  Reader(const json& j, std::string path, Issues& issues)
      : j_(j), path_(std::move(path)), issues_(issues) {
    if (!j_.is_object()) fail("", "expected an object, got " + type_name(j_));
  }

  bool ok() const { return j_.is_object(); }
  const json& raw() const { return j_; }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string& k) const { return ok() && j_.contains(k) && !j_.at(k).is_null(); }
  const json& at(const std::string& k) const { return j_.at(k); }

  void fail(const std::string& k, const std::string& message) const {
    issues_.push_back({k.empty() ? (path_.empty() ? "<root>" : path_) : key(k), message});
  }

  void allow(std::initializer_list<const char*> keys) const {
    if (!ok()) return;
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!known.count(k)) fail(k, "unknown key");
    }
  }

  double number(const std::string& k, double def) const {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_number()) {
      fail(k, "expected a number, got " + type_name(v));
      return def;
    }
    return v.get<double>();
  }

  double required_number(const std::string& k) const {
    if (!has(k)) {
      fail(k, "required");
      return 0.0;
    }
    return number(k, 0.0);
  }

  int integer(const std::string& k, int def) const {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) {
      fail(k, "expected an integer, got " + type_name(v));
      return def;
    }
    const auto n = v.get<long long>();
    if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) {
      fail(k, "integer out of range");
      return def;
    }
    return static_cast<int>(n);
  }

  std::uint64_t unsigned_integer(const std::string& k, std::uint64_t def) const {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_number_unsigned()) {
      fail(k, "expected a non-negative integer, got " + type_name(v));
      return def;
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& k, bool def) const {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_boolean()) {
      fail(k, "expected a boolean, got " + type_name(v));
      return def;
    }
    return v.get<bool>();
  }

  std::string string(const std::string& k, const std::string& def) const {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_string()) {
      fail(k, "expected a string, got " + type_name(v));
      return def;
    }
    return v.get<std::string>();
  }

  /// Applies a name parser (which throws ValidationError) to a string key.
  template <typename T, typename Parse>
  T choice(const std::string& k, T def, Parse parse) const {
    if (!has(k)) return def;
    const std::string name = string(k, "");
    if (name.empty()) return def;
    try {
      return parse(name);
    } catch (const ValidationError& e) {
      fail(k, e.what());
      return def;
    }
  }

 private:
  const json& j_;
  std::string path_;
  Issues& issues_;
};

/// Runs a validating call and turns a ValidationError into an issue at `key`.
template <typename Fn>
void check(Issues& issues, const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    issues.insert(issues.end(), e.issues().begin(), e.issues().end());
  } catch (const ValidationError& e) {
    issues.push_back({key, e.what()});
  } catch (const DimensionError& e) {
    issues.push_back({key, e.what()});
  } catch (const ScheduleError& e) {
    issues.push_back({key, e.what()});
  }
}

void throw_if(const Issues& issues) {
  if (!issues.empty()) throw ConfigError(issues);
}

patterns::Axis axis_from_string(const std::string& name) {
  if (name == "x") return patterns::Axis::x;
  if (name == "y") return patterns::Axis::y;
  if (name == "diagonal") return patterns::Axis::diagonal;
  throw ValidationError("unknown axis '" + name + "' (expected x, y or diagonal)");
}

/// State a pattern may draw on while it is evaluated.
struct PatternEnv {
  CounterRng* rng = nullptr;
  const MixtureScoreModel* model = nullptr;
  const Codec* codec = nullptr;
};

Field eval_pattern(const json& j, const std::string& path, const Shape& shape, PatternEnv& env,
                   Issues& issues) {
  if (j.is_number()) return patterns::constant(shape, j.get<double>());
  Reader r(j, path, issues);
  if (!r.ok()) return Field(shape, 0.0);
  const std::string kind = r.string("pattern", "");
  if (kind == "constant") {
    r.allow({"pattern", "value"});
    return patterns::constant(shape, r.required_number("value"));
  }
  if (kind == "gradient") {
    r.allow({"pattern", "from", "to", "axis"});
    const auto axis = r.choice("axis", patterns::Axis::x, axis_from_string);
    return patterns::gradient(shape, r.number("from", 0.0), r.number("to", 1.0), axis);
  }
  if (kind == "sinusoid") {
    r.allow({"pattern", "amplitude", "period", "angle", "phase", "offset", "random_phase"});
    const double period = r.number("period", 8.0);
    if (!(period > 0.0)) r.fail("period", "must be positive");
    double phase = r.number("phase", 0.0);
    if (r.boolean("random_phase", false)) {
      if (env.rng == nullptr) {
        r.fail("random_phase", "only available for the ground-truth pattern");
      } else {
        phase += 2.0 * std::numbers::pi * env.rng->uniform();
      }
    }
    if (!(period > 0.0)) return Field(shape, 0.0);
    return patterns::sinusoid(shape, r.number("amplitude", 1.0), period, r.number("angle", 0.0),
                              phase, r.number("offset", 0.0));
  }
  if (kind == "checkerboard") {
    r.allow({"pattern", "amplitude", "cell"});
    const int cell = r.integer("cell", 1);
    if (cell < 1) {
      r.fail("cell", "must be >= 1");
      return Field(shape, 0.0);
    }
    return patterns::checkerboard(shape, r.number("amplitude", 1.0), cell);
  }
  if (kind == "sum") {
    r.allow({"pattern", "terms"});
    if (!r.has("terms") || !r.at("terms").is_array() || r.at("terms").empty()) {
      r.fail("terms", "expected a non-empty array");
      return Field(shape, 0.0);
    }
    Field total(shape, 0.0);
    const auto& terms = r.at("terms");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      total += eval_pattern(terms[i], r.key("terms") + "[" + std::to_string(i) + "]", shape, env,
                            issues);
    }
    return total;
  }
  if (kind == "prior_sample") {
    r.allow({"pattern", "component"});
    if (env.rng == nullptr || env.model == nullptr || env.codec == nullptr) {
      r.fail("pattern", "prior_sample is only available for the ground-truth pattern");
      return Field(shape, 0.0);
    }
    const auto& comps = env.model->components();
    std::size_t k = 0;
    if (r.has("component")) {
      const std::string label = r.string("component", "");
      const auto it = std::find_if(comps.begin(), comps.end(),
                                   [&](const auto& c) { return c.label == label; });
      if (it == comps.end()) {
        r.fail("component", "unknown mixture component '" + label + "'");
        return Field(shape, 0.0);
      }
      k = static_cast<std::size_t>(it - comps.begin());
    } else {
      // Draw the component by weight, then the sample.
      const double u = env.rng->uniform();
      double acc = 0.0;
      k = comps.size() - 1;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        acc += comps[i].weight;
        if (u < acc) {
          k = i;
          break;
        }
      }
    }
    Field x = env.codec->decode(comps[k].prior.sample(*env.rng));
    if (x.shape() != shape) {
      r.fail("pattern", "prior sample decodes to " + x.shape().str() + ", expected " +
                            shape.str());
      return Field(shape, 0.0);
    }
    return x;
  }
  r.fail("pattern", kind.empty() ? "required"
                                  : "unknown pattern '" + kind +
                                        "' (expected constant, gradient, sinusoid, checkerboard, "
                                        "sum or prior_sample)");
  return Field(shape, 0.0);
}

GaussianPrior build_gaussian(const json& j, const std::string& path, const Shape& latent,
                             Issues& issues) {
  Reader r(j, path, issues);
  const auto fallback = [&] { return GaussianPrior::isotropic(Field(latent, 0.0), 1.0); };
  if (!r.ok()) return fallback();
  const std::string kind = r.string("kind", "isotropic");
  PatternEnv env;
  Field mean = r.has("mean") ? eval_pattern(r.at("mean"), r.key("mean"), latent, env, issues)
                             : Field(latent, 0.0);
  try {
    if (kind == "isotropic") {
      r.allow({"kind", "mean", "variance"});
      return GaussianPrior::isotropic(std::move(mean), r.number("variance", 1.0));
    }
    if (kind == "diagonal") {
      r.allow({"kind", "mean", "variance"});
      Field var = r.has("variance")
                      ? eval_pattern(r.at("variance"), r.key("variance"), latent, env, issues)
                      : Field(latent, 1.0);
      return GaussianPrior::diagonal(std::move(mean), std::move(var));
    }
    if (kind == "squared_exponential") {
      r.allow({"kind", "mean", "amplitude", "length_scale", "nugget"});
      const double amp = r.number("amplitude", 1.0);
      const double len = r.number("length_scale", 2.0);
      const double nugget = r.number("nugget", 1e-4);
      if (latent.size() > kDenseCovarianceCap) {
        r.fail("kind", "dense covariance needs a latent of at most " +
                           std::to_string(kDenseCovarianceCap) + " elements, got " +
                           std::to_string(latent.size()));
        return fallback();
      }
      return GaussianPrior::dense(std::move(mean),
                                  squared_exponential_covariance(latent, amp, len, nugget));
    }
  } catch (const ValidationError& e) {
    r.fail("kind", e.what());
    return fallback();
  } catch (const DimensionError& e) {
    r.fail("kind", e.what());
    return fallback();
  }
  r.fail("kind", "unknown prior kind '" + kind +
                     "' (expected isotropic, diagonal, squared_exponential or mixture)");
  return fallback();
}

std::unique_ptr<MixtureScoreModel> build_model_checked(const json& j, const Shape& latent,
                                                       Issues& issues) {
  std::vector<MixtureScoreModel::Component> comps;
  Reader r(j, "prior", issues);
  if (r.ok() && r.string("kind", "") == "mixture") {
    r.allow({"kind", "components"});
    if (!r.has("components") || !r.at("components").is_array() || r.at("components").empty()) {
      r.fail("components", "expected a non-empty array");
    } else {
      const auto& arr = r.at("components");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = "prior.components[" + std::to_string(i) + "]";
        Reader c(arr[i], path, issues);
        if (!c.ok()) continue;
        c.allow({"label", "weight", "prior"});
        const std::string label = c.string("label", "c" + std::to_string(i));
        const double weight = c.number("weight", 1.0 / static_cast<double>(arr.size()));
        if (!c.has("prior")) {
          c.fail("prior", "required");
          continue;
        }
        comps.push_back({label, weight, build_gaussian(c.at("prior"), c.key("prior"), latent,
                                                       issues)});
      }
    }
  } else if (r.ok()) {
    comps.push_back({"default", 1.0, build_gaussian(j, "prior", latent, issues)});
  }
  if (comps.empty()) {
    comps.push_back({"default", 1.0, GaussianPrior::isotropic(Field(latent, 0.0), 1.0)});
  }
  std::unique_ptr<MixtureScoreModel> model;
  check(issues, "prior", [&] { model = std::make_unique<MixtureScoreModel>(std::move(comps)); });
  if (!model) {
    model = std::make_unique<MixtureScoreModel>(std::vector<MixtureScoreModel::Component>{
        {"default", 1.0, GaussianPrior::isotropic(Field(latent, 0.0), 1.0)}});
  }
  return model;
}

Field build_mask_checked(const json& j, const Shape& pixel, Issues& issues) {
  Reader r(j, "mask", issues);
  if (!r.ok()) return Field(pixel, 0.0);
  const std::string kind = r.string("kind", "");
  if (kind == "half_plane") {
    r.allow({"kind", "split", "axis"});
    const double split = r.number("split", 0.5);
    if (split < 0.0 || split > 1.0) r.fail("split", "must lie in [0, 1]");
    return patterns::half_plane_mask(pixel, std::clamp(split, 0.0, 1.0),
                                     r.choice("axis", patterns::Axis::x, axis_from_string));
  }
  if (kind == "rectangle") {
    r.allow({"kind", "y0", "x0", "y1", "x1"});
    const double y0 = r.number("y0", 0.25), x0 = r.number("x0", 0.25);
    const double y1 = r.number("y1", 0.75), x1 = r.number("x1", 0.75);
    for (const auto& [k, v] : {std::pair{"y0", y0}, {"x0", x0}, {"y1", y1}, {"x1", x1}}) {
      if (v < 0.0 || v > 1.0) r.fail(k, "must lie in [0, 1]");
    }
    if (y1 < y0) r.fail("y1", "must be >= y0");
    if (x1 < x0) r.fail("x1", "must be >= x0");
    return patterns::rectangle_mask(pixel, y0, x0, y1, x1);
  }
  if (kind == "garment") {
    r.allow({"kind"});
    return patterns::garment_mask(pixel);
  }
  if (kind == "full") {
    r.allow({"kind"});
    return Field(pixel, 1.0);
  }
  if (kind == "empty") {
    r.allow({"kind"});
    return Field(pixel, 0.0);
  }
  r.fail("kind", kind.empty() ? "required"
                              : "unknown mask kind '" + kind +
                                    "' (expected half_plane, rectangle, garment, full or empty)");
  return Field(pixel, 0.0);
}

InitStrategy parse_init(const json& j, const std::string& path, Issues& issues) {
  InitStrategy init;
  Reader r(j, path, issues);
  if (!r.ok()) return init;
  r.allow({"kind", "offset_scale"});
  init.kind = r.choice("kind", init.kind, init_kind_from_string);
  init.offset_scale = r.number("offset_scale", init.offset_scale);
  if (init.offset_scale < 0.0) r.fail("offset_scale", "must be non-negative");
  return init;
}

bool csv_safe(const std::string& s) {
  return s.find_first_of(",\"\n\r") == std::string::npos;
}

VariantSpec parse_variant(const json& j, const std::string& path, Issues& issues) {
  VariantSpec v;
  Reader r(j, path, issues);
  if (!r.ok()) return v;
  r.allow({"label", "kind", "gamma", "eta_beta_rule", "eta_scale", "pixel_opt", "freq_cutoff",
           "denoise_period", "finalize_posthoc", "data_consistency", "frequency_correction",
           "init", "plan_start"});
  auto& s = v.solver;
  if (!r.has("kind")) r.fail("kind", "required");
  s.kind = r.choice("kind", s.kind, solver_kind_from_string);
  s.label = r.string("label", "");
  if (!csv_safe(s.label)) r.fail("label", "must not contain commas, quotes or newlines");
  s.gamma = r.number("gamma", s.gamma);
  if (!(s.gamma >= 0.0)) r.fail("gamma", "must be >= 0");
  if (r.has("eta_beta_rule")) {
    s.eta_beta_rule = r.choice("eta_beta_rule", NoiseRule::dreamsampler, noise_rule_from_string);
  }
  s.eta_scale = r.number("eta_scale", s.eta_scale);
  if (!(s.eta_scale >= 0.0)) r.fail("eta_scale", "must be >= 0");
  if (r.has("pixel_opt")) {
    Reader p(r.at("pixel_opt"), r.key("pixel_opt"), issues);
    if (p.ok()) {
      p.allow({"learning_rate", "lambda", "iterations", "closed_form"});
      s.pixel_opt.learning_rate = p.number("learning_rate", s.pixel_opt.learning_rate);
      s.pixel_opt.lambda = p.number("lambda", s.pixel_opt.lambda);
      s.pixel_opt.iterations = p.integer("iterations", s.pixel_opt.iterations);
      s.pixel_opt.closed_form = p.boolean("closed_form", s.pixel_opt.closed_form);
      if (!(s.pixel_opt.learning_rate > 0.0)) p.fail("learning_rate", "must be > 0");
      if (!(s.pixel_opt.lambda > 0.0)) p.fail("lambda", "must be > 0");
      if (s.pixel_opt.iterations < 0) p.fail("iterations", "must be >= 0");
    }
  }
  s.freq_cutoff = r.number("freq_cutoff", s.freq_cutoff);
  if (!(s.freq_cutoff >= 0.0 && s.freq_cutoff <= 1.0)) r.fail("freq_cutoff", "must lie in [0,1]");
  s.denoise_period = r.integer("denoise_period", s.denoise_period);
  if (s.denoise_period < 0) r.fail("denoise_period", "must be >= 0");
  s.finalize_posthoc = r.boolean("finalize_posthoc", s.finalize_posthoc);
  s.data_consistency = r.boolean("data_consistency", s.data_consistency);
  s.frequency_correction = r.boolean("frequency_correction", s.frequency_correction);
  if (r.has("init")) v.init = parse_init(r.at("init"), r.key("init"), issues);
  if (r.has("plan_start")) v.plan_start = r.integer("plan_start", 0);
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json number_json(double v) {
  if (std::isfinite(v)) return v;
  return fmt_double(v);
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  throw IoError("manifest row holds a non-numeric metric");
}

json optional_json(const std::optional<double>& v) {
  return v ? number_json(*v) : json(nullptr);
}

std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return number_from_json(j);
}

json row_to_json(const MetricsRow& row) {
  return {{"trial", row.trial},
          {"solver", row.solver},
          {"kind", row.kind},
          {"init", row.init},
          {"psnr", number_json(row.psnr)},
          {"ssim", number_json(row.ssim)},
          {"boundary_score", optional_json(row.boundary_score)},
          {"posterior_error", optional_json(row.posterior_error)},
          {"measurement_residual", number_json(row.measurement_residual)}};
}

MetricsRow row_from_json(const json& j) {
  MetricsRow row;
  row.trial = j.at("trial").get<int>();
  row.solver = j.at("solver").get<std::string>();
  row.kind = j.at("kind").get<std::string>();
  row.init = j.at("init").get<std::string>();
  row.psnr = number_from_json(j.at("psnr"));
  row.ssim = number_from_json(j.at("ssim"));
  row.boundary_score = optional_from_json(j.at("boundary_score"));
  row.posterior_error = optional_from_json(j.at("posterior_error"));
  row.measurement_residual = number_from_json(j.at("measurement_residual"));
  return row;
}

json shape_json(const Shape& s) { return json::array({s.channels, s.height, s.width}); }

json codec_json(const Codec& c) {
  json j = {{"kind", to_string(c.kind)}, {"sigma_e", c.sigma_e}};
  if (c.kind == CodecKind::blockmean) j["factor"] = c.factor;
  return j;
}

json init_json(const InitStrategy& init) {
  return {{"kind", to_string(init.kind)}, {"offset_scale", init.offset_scale}};
}

/// File-name stem for a variant: its index plus the label reduced to a
/// portable character set.
std::string variant_tag(std::size_t index, const std::string& label) {
  std::string clean;
  for (char ch : label) {
    const bool keep = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                      (ch >= '0' && ch <= '9') || ch == '-' || ch == '_' || ch == '.';
    clean += keep ? ch : (ch == '+' ? 'p' : '_');
  }
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%02zu_", index);
  return prefix + clean;
}

std::string trial_dir(int trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%04d", trial);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ConfigError::ConfigError(std::vector<Issue> issues)
    : ValidationError(join_issues(issues)), issues_(std::move(issues)) {}

nlohmann::json ConfigError::report() const {
  json arr = json::array();
  for (const auto& i : issues_) arr.push_back({{"key", i.key}, {"message", i.message}});
  return {{"error", "invalid config"}, {"issues", arr}};
}

nlohmann::json solver_to_json(const SolverSpec& s) {
  json j = {{"label", s.display_name()},
            {"kind", to_string(s.kind)},
            {"gamma", s.gamma},
            {"eta_beta_rule", to_string(s.noise_rule())},
            {"eta_scale", s.eta_scale},
            {"pixel_opt",
             {{"learning_rate", s.pixel_opt.learning_rate},
              {"lambda", s.pixel_opt.lambda},
              {"iterations", s.pixel_opt.iterations},
              {"closed_form", s.pixel_opt.closed_form}}},
            {"freq_cutoff", s.freq_cutoff},
            {"denoise_period", s.denoise_period},
            {"finalize_posthoc", s.finalize_posthoc},
            {"data_consistency", s.data_consistency},
            {"frequency_correction", s.frequency_correction}};
  return j;
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
  Issues issues;
  ExperimentConfig cfg;
  cfg.source = doc;
  Reader r(doc, "", issues);
  throw_if(issues);
  r.allow({"name", "seed", "trials", "threads", "shape", "schedule", "plan", "codec", "init",
           "guidance", "prior", "truth", "mask", "noise_std", "solvers", "metrics",
           "output_dir", "description"});

  cfg.name = r.string("name", cfg.name);
  cfg.seed = r.unsigned_integer("seed", cfg.seed);
  cfg.trials = r.integer("trials", cfg.trials);
  if (cfg.trials < 1) r.fail("trials", "must be >= 1");
  const int threads = r.integer("threads", 1);
  if (threads < 1) r.fail("threads", "must be >= 1");
  cfg.threads = static_cast<unsigned>(std::max(threads, 1));
  cfg.output_dir = r.string("output_dir", cfg.output_dir);
  if (cfg.output_dir.empty()) r.fail("output_dir", "must not be empty");

  if (r.has("shape")) {
    Reader s(r.at("shape"), "shape", issues);
    if (s.ok()) {
      s.allow({"channels", "height", "width"});
      cfg.pixel_shape = {s.integer("channels", 1), s.integer("height", 32),
                         s.integer("width", 32)};
      if (cfg.pixel_shape.channels < 1 || cfg.pixel_shape.height < 1 ||
          cfg.pixel_shape.width < 1) {
        s.fail("", "all extents must be >= 1");
        cfg.pixel_shape = {1, 32, 32};
      }
    }
  }

  if (r.has("schedule")) {
    Reader s(r.at("schedule"), "schedule", issues);
    if (s.ok()) {
      s.allow({"kind", "T", "beta_start", "beta_end"});
      cfg.schedule.kind = s.choice("kind", cfg.schedule.kind, schedule_kind_from_string);
      if (cfg.schedule.kind == ScheduleKind::tabulated) {
        s.fail("kind", "tabulated schedules cannot be configured from JSON");
        cfg.schedule.kind = ScheduleKind::scaled_linear;
      }
      cfg.schedule.T = s.integer("T", cfg.schedule.T);
      cfg.schedule.beta_start = s.number("beta_start", cfg.schedule.beta_start);
      cfg.schedule.beta_end = s.number("beta_end", cfg.schedule.beta_end);
    }
  }
  std::optional<NoiseSchedule> sched;
  check(issues, "schedule", [&] { sched = cfg.schedule.build(); });

  if (r.has("plan")) {
    Reader p(r.at("plan"), "plan", issues);
    if (p.ok()) {
      p.allow({"steps", "start", "stride"});
      cfg.plan.steps = p.integer("steps", cfg.plan.steps);
      cfg.plan.start = p.integer("start", cfg.plan.start);
      cfg.plan.stride = p.integer("stride", cfg.plan.stride);
    }
  }

  if (r.has("codec")) {
    Reader c(r.at("codec"), "codec", issues);
    if (c.ok()) {
      c.allow({"kind", "factor", "sigma_e"});
      const auto kind = c.choice("kind", CodecKind::identity, codec_kind_from_string);
      const double sigma = c.number("sigma_e", 0.05);
      cfg.codec = kind == CodecKind::identity ? Codec::identity()
                                              : Codec::blockmean(c.integer("factor", 2));
      cfg.codec.sigma_e = sigma;
    }
  }
  std::optional<Shape> latent;
  check(issues, "codec", [&] {
    cfg.codec.validate();
    latent = cfg.codec.latent_shape(cfg.pixel_shape);
  });

  if (r.has("init")) cfg.init = parse_init(r.at("init"), "init", issues);

  if (r.has("guidance")) {
    Reader g(r.at("guidance"), "guidance", issues);
    if (g.ok()) {
      g.allow({"cfg_scale", "condition"});
      cfg.guidance.cfg_scale = g.number("cfg_scale", cfg.guidance.cfg_scale);
      if (g.has("condition")) cfg.condition = g.string("condition", "");
      check(issues, "guidance.cfg_scale", [&] { cfg.guidance.validate(); });
    }
  }

  cfg.noise_std = r.number("noise_std", 0.0);
  if (cfg.noise_std < 0.0) r.fail("noise_std", "must be non-negative");

  if (r.has("metrics")) {
    Reader m(r.at("metrics"), "metrics", issues);
    if (m.ok()) {
      m.allow({"peak", "ssim_window", "boundary_band"});
      cfg.metrics.peak = m.number("peak", cfg.metrics.peak);
      cfg.metrics.ssim_window = m.integer("ssim_window", cfg.metrics.ssim_window);
      cfg.metrics.boundary_band = m.integer("boundary_band", cfg.metrics.boundary_band);
      if (!(cfg.metrics.peak > 0.0)) m.fail("peak", "must be positive");
      if (cfg.metrics.ssim_window < 1 || cfg.metrics.ssim_window % 2 == 0) {
        m.fail("ssim_window", "must be a positive odd integer");
      }
      if (cfg.metrics.boundary_band < 1) m.fail("boundary_band", "must be >= 1");
    }
  }

  if (!r.has("solvers") || !r.at("solvers").is_array() || r.at("solvers").empty()) {
    r.fail("solvers", "expected a non-empty array");
  } else {
    const auto& arr = r.at("solvers");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "solvers[" + std::to_string(i) + "]";
      const std::size_t before = issues.size();
      auto v = parse_variant(arr[i], path, issues);
      const bool solver_ok = issues.size() == before;
      if (!labels.insert(v.solver.display_name()).second) {
        issues.push_back({path + ".label", "duplicate solver label '" +
                                               v.solver.display_name() + "'"});
      }
      if (sched && solver_ok) {
        check(issues, path, [&] {
          const auto plan = make_plan(*sched, cfg.plan.steps, v.plan_start.value_or(cfg.plan.start),
                                      cfg.plan.stride);
          v.solver.validate_against(plan, *sched);
        });
      }
      cfg.variants.push_back(std::move(v));
    }
  }
  if (sched) {
    check(issues, "plan", [&] {
      make_plan(*sched, cfg.plan.steps, cfg.plan.start, cfg.plan.stride);
    });
  }

  cfg.prior = r.has("prior") ? r.at("prior") : json{{"kind", "isotropic"}};
  cfg.truth = r.has("truth") ? r.at("truth") : json{{"pattern", "prior_sample"}};
  if (!r.has("mask")) r.fail("mask", "required");
  cfg.mask = r.has("mask") ? r.at("mask") : json{{"kind", "empty"}};

  if (latent) {
    auto model = build_model_checked(cfg.prior, *latent, issues);
    if (cfg.condition) {
      check(issues, "guidance.condition", [&] { model->condition(*cfg.condition); });
    }
    build_mask_checked(cfg.mask, cfg.pixel_shape, issues);
    CounterRng probe(cfg.seed, std::uint64_t{1} << 32);
    PatternEnv env{&probe, model.get(), &cfg.codec};
    eval_pattern(cfg.truth, "truth", cfg.pixel_shape, env, issues);
  }
  throw_if(issues);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const auto bytes = io::read_bytes(path);
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

std::unique_ptr<MixtureScoreModel> build_model(const ExperimentConfig& cfg) {
  Issues issues;
  auto model = build_model_checked(cfg.prior, cfg.codec.latent_shape(cfg.pixel_shape), issues);
  throw_if(issues);
  return model;
}

Field build_truth(const ExperimentConfig& cfg, const MixtureScoreModel& model, int trial) {
  Issues issues;
  CounterRng rng(cfg.seed, (std::uint64_t{1} << 32) + static_cast<std::uint64_t>(trial));
  PatternEnv env{&rng, &model, &cfg.codec};
  Field x = eval_pattern(cfg.truth, "truth", cfg.pixel_shape, env, issues);
  throw_if(issues);
  return x;
}

Field build_mask(const ExperimentConfig& cfg) {
  Issues issues;
  Field m = build_mask_checked(cfg.mask, cfg.pixel_shape, issues);
  throw_if(issues);
  return m;
}

std::string format_metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = kMetricsHeader;
  out += '\n';
  const auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : ""; };
  for (const auto& r : rows) {
    out += std::to_string(r.trial) + ',' + r.solver + ',' + r.kind + ',' + r.init + ',' +
           fmt_double(r.psnr) + ',' + fmt_double(r.ssim) + ',' + opt(r.boundary_score) + ',' +
           opt(r.posterior_error) + ',' + fmt_double(r.measurement_residual) + '\n';
  }
  return out;
}

nlohmann::json ResultManifest::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) rows_json.push_back(row_to_json(r));
  json files_json = json::array();
  for (const auto& f : files) {
    files_json.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  }
  return {{"format", "artlab-manifest/1"},
          {"config", config},
          {"rows", rows_json},
          {"files", files_json}};
}

namespace {

struct VariantResult {
  MetricsRow row;
  Field raw;
  Field output;
  std::optional<Field> heatmap;
};

struct TrialResult {
  Field truth;
  std::vector<VariantResult> variants;
};

}  // namespace

ResultManifest run_experiment(ExperimentConfig cfg, const RunOverrides& overrides) {
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.trials) {
    if (*overrides.trials < 1) throw ConfigError("trials", "must be >= 1");
    cfg.trials = *overrides.trials;
  }
  if (overrides.threads) {
    if (*overrides.threads < 1) throw ConfigError("threads", "must be >= 1");
    cfg.threads = *overrides.threads;
  }
  if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;

  const NoiseSchedule sched = cfg.schedule.build();
  const auto model = build_model(cfg);
  const Field mask = build_mask(cfg);
  const Condition condition =
      cfg.condition ? model->condition(*cfg.condition) : Condition::null_condition();

  // The exact posterior mean is available when the sampled distribution is a
  // single Gaussian observed noiselessly in pixel space.
  const GaussianPrior* exact_prior = nullptr;
  if (cfg.codec.kind == CodecKind::identity && cfg.noise_std == 0.0) {
    if (condition.component) {
      exact_prior = &model->components()[*condition.component].prior;
    } else if (model->components().size() == 1) {
      exact_prior = &model->components().front().prior;
    }
  }

  std::vector<TimestepPlan> plans;
  std::vector<InitStrategy> inits;
  for (const auto& v : cfg.variants) {
    plans.push_back(make_plan(sched, cfg.plan.steps, v.plan_start.value_or(cfg.plan.start),
                              cfg.plan.stride));
    inits.push_back(v.init.value_or(cfg.init));
    v.solver.validate_against(plans.back(), sched);
  }

  std::optional<BoundaryRegions> regions;
  try {
    regions.emplace(mask, cfg.metrics.boundary_band);
  } catch (const UndefinedScoreError&) {
  }

  std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
  parallel_for(results.size(), cfg.threads, [&](std::size_t i) {
    const int trial = static_cast<int>(i);
    TrialResult& out = results[i];
    out.truth = build_truth(cfg, *model, trial);
    CounterRng truth_rng(cfg.seed, (std::uint64_t{1} << 48) + i);
    const Measurement m = make_measurement(out.truth, mask, cfg.codec, cfg.noise_std, &truth_rng);
    std::optional<Field> oracle_mean;
    if (exact_prior != nullptr) oracle_mean = masked_conditional_mean(*exact_prior, mask, m.observation);

    const SamplingContext ctx{*model, sched, cfg.codec, &m, condition, cfg.guidance};
    TrajectoryOptions options;
    options.record_latents = false;
    options.boundary_band = cfg.metrics.boundary_band;
    for (std::size_t k = 0; k < cfg.variants.size(); ++k) {
      const SolverSpec& spec = cfg.variants[k].solver;
      CounterRng rng(cfg.seed, i);
      const auto log = run_trajectory(plans[k], inits[k], spec, ctx, rng, options);
      auto fin = finalize(log, &m, spec, cfg.codec);

      VariantResult vr;
      vr.row.trial = trial;
      vr.row.solver = spec.display_name();
      vr.row.kind = to_string(spec.kind);
      vr.row.init = to_string(inits[k].kind);
      vr.row.psnr = psnr(fin.output, out.truth, cfg.metrics.peak);
      vr.row.ssim = ssim(fin.output, out.truth, cfg.metrics.ssim_window, cfg.metrics.peak);
      if (regions) {
        vr.row.boundary_score = regions->score(fin.output);
        vr.heatmap = gradient_magnitude(fin.output);
      }
      if (oracle_mean) vr.row.posterior_error = posterior_error({fin.output}, *oracle_mean, mask);
      vr.row.measurement_residual = measurement_residual(fin.output, m);
      vr.raw = std::move(fin.raw);
      vr.output = std::move(fin.output);
      out.variants.push_back(std::move(vr));
    }
  });

  const std::filesystem::path dir = cfg.output_dir;
  std::vector<FileEntry> files;
  const auto commit = [&](const std::string& rel, const std::vector<std::uint8_t>& bytes) {
    io::write_bytes(dir / rel, bytes);
    files.push_back({rel, sha256_hex(bytes), bytes.size()});
  };

  commit("mask.pgm", io::encode_pnm(mask, 0.0, 1.0));
  std::vector<MetricsRow> rows;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& tr = results[i];
    const std::string td = trial_dir(static_cast<int>(i));
    commit(td + "/truth.artf", io::encode_dump(tr.truth));
    commit(td + "/truth.pgm", io::encode_pnm(tr.truth, 0.0, cfg.metrics.peak));
    for (std::size_t k = 0; k < tr.variants.size(); ++k) {
      const auto& vr = tr.variants[k];
      const std::string stem = td + "/" + variant_tag(k, vr.row.solver);
      commit(stem + ".raw.artf", io::encode_dump(vr.raw));
      commit(stem + ".output.artf", io::encode_dump(vr.output));
      commit(stem + ".output.pgm", io::encode_pnm(vr.output, 0.0, cfg.metrics.peak));
      if (vr.heatmap) {
        const double hi = std::max(max_abs(*vr.heatmap), 1e-12);
        commit(stem + ".heatmap.pgm", io::encode_pnm(*vr.heatmap, 0.0, hi));
      }
      rows.push_back(vr.row);
    }
  }
  const std::string csv = format_metrics_csv(rows);
  commit("metrics.csv", std::vector<std::uint8_t>(csv.begin(), csv.end()));
  std::sort(files.begin(), files.end(),
            [](const FileEntry& a, const FileEntry& b) { return a.path < b.path; });

  ResultManifest manifest;
  manifest.output_dir = dir;
  manifest.rows = std::move(rows);
  manifest.files = std::move(files);

  json echo = cfg.source;
  echo["seed"] = cfg.seed;
  echo["trials"] = cfg.trials;
  echo["threads"] = cfg.threads;
  echo["output_dir"] = cfg.output_dir;
  json solvers = json::array();
  for (std::size_t k = 0; k < cfg.variants.size(); ++k) {
    json s = solver_to_json(cfg.variants[k].solver);
    s["init"] = init_json(inits[k]);
    s["plan_start"] = plans[k].timesteps.front();
    solvers.push_back(std::move(s));
  }
  manifest.config = {{"name", cfg.name},
                     {"source", echo},
                     {"resolved",
                      {{"pixel_shape", shape_json(cfg.pixel_shape)},
                       {"latent_shape", shape_json(cfg.codec.latent_shape(cfg.pixel_shape))},
                       {"schedule",
                        {{"kind", to_string(cfg.schedule.kind)},
                         {"T", cfg.schedule.T},
                         {"beta_start", cfg.schedule.beta_start},
                         {"beta_end", cfg.schedule.beta_end}}},
                       {"plan",
                        {{"steps", cfg.plan.steps},
                         {"start", cfg.plan.start},
                         {"stride", cfg.plan.stride}}},
                       {"codec", codec_json(cfg.codec)},
                       {"condition", cfg.condition ? json(*cfg.condition) : json(nullptr)},
                       {"cfg_scale", cfg.guidance.cfg_scale},
                       {"solvers", solvers}}}};
  io::write_text(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

std::vector<SolverSummary> compare_manifests(const std::vector<std::filesystem::path>& paths) {
  std::vector<SolverSummary> out;
  for (const auto& path : paths) {
    const auto verdict = verify_manifest(path);
    if (!verdict.ok) {
      std::string msg = "manifest " + path.string() + " failed verification";
      for (const auto& p : verdict.problems) msg += "\n  " + p;
      throw IntegrityError(msg);
    }
    const auto bytes = io::read_bytes(path);
    const json doc = json::parse(bytes.begin(), bytes.end());
    std::vector<std::string> order;
    std::map<std::string, std::vector<MetricsRow>> groups;
    try {
      for (const auto& j : doc.at("rows")) {
        auto row = row_from_json(j);
        if (!groups.count(row.solver)) order.push_back(row.solver);
        groups[row.solver].push_back(std::move(row));
      }
    } catch (const json::exception& e) {
      throw IoError("manifest " + path.string() + " has malformed rows: " + e.what());
    }
    for (const auto& name : order) {
      const auto& rows = groups[name];
      SolverSummary s;
      s.manifest = path.string();
      s.solver = name;
      s.rows = rows.size();
      std::vector<double> p, q, b, e;
      for (const auto& r : rows) {
        p.push_back(r.psnr);
        q.push_back(r.ssim);
        if (r.boundary_score) b.push_back(*r.boundary_score);
        if (r.posterior_error) e.push_back(*r.posterior_error);
        s.max_measurement_residual = std::max(s.max_measurement_residual, r.measurement_residual);
      }
      s.median_psnr = median(p);
      s.median_ssim = median(q);
      if (!b.empty()) s.median_boundary_score = median(b);
      if (!e.empty()) s.median_posterior_error = median(e);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string format_summary(const std::vector<SolverSummary>& rows) {
  std::ostringstream os;
  char line[512];
  std::snprintf(line, sizeof line, "%-28s %6s %10s %8s %12s %12s %12s  %s\n", "solver", "rows",
                "psnr", "ssim", "boundary", "post_err", "max_resid", "manifest");
  os << line;
  const auto opt = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("-");
    std::snprintf(buf, sizeof buf, "%.5f", *v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-28s %6zu %10.4f %8.5f %12s %12s %12.3e  %s\n",
                  r.solver.c_str(), r.rows, r.median_psnr, r.median_ssim,
                  opt(r.median_boundary_score).c_str(), opt(r.median_posterior_error).c_str(),
                  r.max_measurement_residual, r.manifest.c_str());
    os << line;
  }
  return os.str();
}

void render_dump(const std::filesystem::path& dump, const std::filesystem::path& out,
                 std::optional<double> lo, std::optional<double> hi) {
  const Field f = io::read_dump(dump);
  const auto [mn, mx] = std::minmax_element(f.values().begin(), f.values().end());
  double a = lo.value_or(*mn);
  double b = hi.value_or(*mx);
  if (!(b > a)) b = a + 1.0;
  io::write_pnm(out, f, a, b);
}

}  // namespace artlab
