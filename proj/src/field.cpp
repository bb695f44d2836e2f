#include "artlab/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "artlab/error.hpp"

namespace artlab {

std::string Shape::str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

namespace {

void validate_shape(const Shape& s) {
  if (s.channels < 1 || s.height < 1 || s.width < 1) {
    throw ValidationError("field shape must be positive, got " + s.str());
  }
}

}  // namespace

Field::Field(Shape shape, double fill) : shape_(shape) {
  validate_shape(shape_);
  if (!std::isfinite(fill)) throw NumericalError("field fill value is not finite");
  values_.assign(shape_.size(), fill);
}

Field::Field(Shape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
  validate_shape(shape_);
  if (values_.size() != shape_.size()) {
    throw DimensionError("field data length " + std::to_string(values_.size()) +
                         " does not match shape " + shape_.str());
  }
  if (!all_finite(*this)) throw NumericalError("field data contains non-finite values");
}

std::span<double> Field::plane(int c) {
  return std::span<double>(values_).subspan(static_cast<std::size_t>(c) * shape_.plane_size(),
                                            shape_.plane_size());
}

std::span<const double> Field::plane(int c) const {
  return std::span<const double>(values_).subspan(
      static_cast<std::size_t>(c) * shape_.plane_size(), shape_.plane_size());
}

Field& Field::operator+=(const Field& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }
Field operator*(Field a, double s) { return a *= s; }

void require_same_shape(const Field& a, const Field& b, const char* context) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(context) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
  }
}

void require_binary(const Field& mask, const char* context) {
  for (double v : mask.values()) {
    if (v != 0.0 && v != 1.0) {
      throw ValidationError(std::string(context) + ": mask values must be 0 or 1, found " +
                            std::to_string(v));
    }
  }
}

Field hadamard(const Field& a, const Field& b) {
  require_same_shape(a, b, "hadamard");
  Field out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Field elementwise_blend(const Field& mask, const Field& a, const Field& b) {
  require_same_shape(mask, a, "elementwise_blend");
  require_same_shape(mask, b, "elementwise_blend");
  require_binary(mask, "elementwise_blend");
  Field out(mask.shape());
  // Selection rather than arithmetic keeps both branches bit-exact.
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] == 1.0 ? a[i] : b[i];
  return out;
}

Field lerp(const Field& base, const Field& target, double weight) {
  require_same_shape(base, target, "lerp");
  Field out(base.shape());
  for (std::size_t i = 0; i < base.size(); ++i) {
    out[i] = base[i] + weight * (target[i] - base[i]);
  }
  return out;
}

double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Field& a, const Field& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double sum_squares(const Field& f) {
  double s = 0.0;
  for (double v : f.values()) s += v * v;
  return s;
}

double mean(const Field& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s / static_cast<double>(f.size());
}

bool all_finite(const Field& f) {
  return std::all_of(f.values().begin(), f.values().end(),
                     [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Separable direct DFT: rows then columns, O(HW(H+W)) per channel.

namespace {

using cplx = std::complex<double>;

std::vector<cplx> twiddles(int n, double sign) {
  std::vector<cplx> w(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * k / n;
    w[k] = cplx(std::cos(angle), std::sin(angle));
  }
  return w;
}

// In-place 1-D DFT over `n` strided samples starting at `base`.
void dft_lines(std::vector<cplx>& data, std::size_t base, int n, std::size_t stride,
               const std::vector<cplx>& w, std::vector<cplx>& scratch) {
  scratch.assign(static_cast<std::size_t>(n), cplx{});
  for (int k = 0; k < n; ++k) {
    cplx acc{};
    for (int j = 0; j < n; ++j) {
      acc += data[base + j * stride] * w[(static_cast<std::size_t>(k) * j) % n];
    }
    scratch[k] = acc;
  }
  for (int k = 0; k < n; ++k) data[base + k * stride] = scratch[k];
}

void transform(std::vector<cplx>& data, const Shape& s, double sign) {
  const auto wx = twiddles(s.width, sign);
  const auto wy = twiddles(s.height, sign);
  std::vector<cplx> scratch;
  for (int c = 0; c < s.channels; ++c) {
    const std::size_t plane = static_cast<std::size_t>(c) * s.plane_size();
    for (int y = 0; y < s.height; ++y) {
      dft_lines(data, plane + static_cast<std::size_t>(y) * s.width, s.width, 1, wx, scratch);
    }
    for (int x = 0; x < s.width; ++x) {
      dft_lines(data, plane + x, s.height, static_cast<std::size_t>(s.width), wy, scratch);
    }
  }
}

}  // namespace

SpectralField dft2(const Field& f) {
  SpectralField s{f.shape(), std::vector<cplx>(f.values().begin(), f.values().end())};
  transform(s.coefficients, s.shape, -1.0);
  return s;
}

Field idft2(const SpectralField& s) {
  std::vector<cplx> data = s.coefficients;
  transform(data, s.shape, +1.0);
  Field out(s.shape);
  const double norm = 1.0 / static_cast<double>(s.shape.plane_size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real() * norm;
  return out;
}

double radial_frequency(int ky, int kx, int height, int width) {
  auto signed_freq = [](int k, int n) {
    const int folded = k <= n / 2 ? k : k - n;
    return static_cast<double>(folded) / n;
  };
  const double fy = signed_freq(ky, height);
  const double fx = signed_freq(kx, width);
  const double r_max =
      std::hypot(static_cast<double>(height / 2) / height, static_cast<double>(width / 2) / width);
  if (r_max == 0.0) return 0.0;
  return std::hypot(fy, fx) / r_max;
}

namespace {

constexpr double kBandTolerance = 1e-12;

void check_cutoff(double cutoff) {
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) {
    throw ValidationError("frequency cutoff must lie in [0,1], got " + std::to_string(cutoff));
  }
}

bool is_low(int ky, int kx, const Shape& s, double cutoff) {
  return radial_frequency(ky, kx, s.height, s.width) <= cutoff + kBandTolerance;
}

}  // namespace

FrequencySplit radial_split(const Field& f, double cutoff) {
  check_cutoff(cutoff);
  if (cutoff >= 1.0) return {f, Field::zeros_like(f)};
  SpectralField spec = dft2(f);
  const Shape& s = f.shape();
  for (int c = 0; c < s.channels; ++c) {
    for (int ky = 0; ky < s.height; ++ky) {
      for (int kx = 0; kx < s.width; ++kx) {
        if (!is_low(ky, kx, s, cutoff)) spec.at(c, ky, kx) = 0.0;
      }
    }
  }
  Field low = idft2(spec);
  Field high = f - low;
  return {std::move(low), std::move(high)};
}

double band_energy(const Field& f, double cutoff, bool above_cutoff) {
  check_cutoff(cutoff);
  const SpectralField spec = dft2(f);
  const Shape& s = f.shape();
  double energy = 0.0;
  for (int c = 0; c < s.channels; ++c) {
    for (int ky = 0; ky < s.height; ++ky) {
      for (int kx = 0; kx < s.width; ++kx) {
        if (is_low(ky, kx, s, cutoff) != above_cutoff) energy += std::norm(spec.at(c, ky, kx));
      }
    }
  }
  return energy / static_cast<double>(s.plane_size());
}

}  // namespace artlab
