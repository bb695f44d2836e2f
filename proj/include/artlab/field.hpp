#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace artlab {

struct Shape {
  int channels = 1;
  int height = 1;
  int width = 1;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense C x H x W grid of doubles, row-major within each channel plane,
/// planes stored back to back.
class Field {
 public:
  Field() = default;
  explicit Field(Shape shape, double fill = 0.0);
  Field(Shape shape, std::vector<double> values);

  static Field zeros_like(const Field& f) { return Field(f.shape()); }

  const Shape& shape() const noexcept { return shape_; }
  int channels() const noexcept { return shape_.channels; }
  int height() const noexcept { return shape_.height; }
  int width() const noexcept { return shape_.width; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(int c, int y, int x) { return values_[index(c, y, x)]; }
  double operator()(int c, int y, int x) const { return values_[index(c, y, x)]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> plane(int c);
  std::span<const double> plane(int c) const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

  bool operator==(const Field& other) const = default;

 private:
  std::size_t index(int c, int y, int x) const noexcept {
    return (static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x;
  }

  Shape shape_{};
  std::vector<double> values_ = std::vector<double>(1, 0.0);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);
Field operator*(Field a, double s);

void require_same_shape(const Field& a, const Field& b, const char* context);
void require_binary(const Field& mask, const char* context);

Field hadamard(const Field& a, const Field& b);

/// out = mask * a + (1 - mask) * b for a binary mask.
Field elementwise_blend(const Field& mask, const Field& a, const Field& b);

/// base + weight * (target - base). Returns base unchanged when target == base.
Field lerp(const Field& base, const Field& target, double weight);

double max_abs(const Field& f);
double max_abs_diff(const Field& a, const Field& b);
double sum_squares(const Field& f);
double mean(const Field& f);
bool all_finite(const Field& f);

struct SpectralField {
  Shape shape{};
  std::vector<std::complex<double>> coefficients;

  std::complex<double>& at(int c, int ky, int kx) {
    return coefficients[(static_cast<std::size_t>(c) * shape.height + ky) * shape.width + kx];
  }
  const std::complex<double>& at(int c, int ky, int kx) const {
    return coefficients[(static_cast<std::size_t>(c) * shape.height + ky) * shape.width + kx];
  }
};

/// Unnormalized forward 2-D DFT of every channel plane.
SpectralField dft2(const Field& f);
/// Inverse of dft2 (1/(H*W) normalization); the imaginary residue is dropped.
Field idft2(const SpectralField& s);

/// Normalized radial frequency of DFT bin (ky, kx): 0 at DC, 1 at the
/// highest-magnitude frequency representable on an H x W grid.
double radial_frequency(int ky, int kx, int height, int width);

struct FrequencySplit {
  Field low;
  Field high;
};

/// low keeps the bins with radial_frequency <= cutoff, high = f - low.
FrequencySplit radial_split(const Field& f, double cutoff);

/// Energy of the bins above (or at-or-below) the cutoff, Parseval-normalized so
/// that the two bands of a field sum to sum_squares(field).
double band_energy(const Field& f, double cutoff, bool above_cutoff);

}  // namespace artlab
