#pragma once

#include <vector>

#include "artlab/field.hpp"

namespace artlab {

/// 10 log10(peak^2 / MSE); +infinity when the inputs are identical.
double psnr(const Field& a, const Field& b, double peak);

/// Mean local SSIM over all channels with a uniform window and symmetric
/// (edge-duplicating) reflection at the borders; k1 = 0.01, k2 = 0.03.
double ssim(const Field& a, const Field& b, int window = 7, double data_range = 1.0);

/// Per-pixel gradient magnitude |grad x| averaged over channels, one channel.
/// Forward differences, backward at the last row/column.
Field gradient_magnitude(const Field& x);

/// Pixel sets used by boundary_score, computed once per mask.
///
/// The boundary is every pixel with a 4-neighbour of the other mask value.
/// The band holds pixels within Chebyshev distance band - 1 of it; the
/// reference holds equally many pixels at distance >= 2 * band, nearest first.
class BoundaryRegions {
 public:
  BoundaryRegions(const Field& mask, int band);

  const std::vector<std::size_t>& band_pixels() const noexcept { return band_; }
  const std::vector<std::size_t>& reference_pixels() const noexcept { return reference_; }
  double score(const Field& x) const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::size_t> band_;
  std::vector<std::size_t> reference_;
};

struct BoundaryScore {
  double score = 0.0;
  Field heatmap;
};

/// Mean gradient magnitude over the boundary band minus that over the interior
/// reference band. Positive values mean the mask boundary is sharper than the
/// rest of the image.
BoundaryScore boundary_score(const Field& x, const Field& mask, int band = 1);

/// RMS over unobserved coordinates (mask == 0) of mean(samples) - oracle_mean.
double posterior_error(const std::vector<Field>& samples, const Field& oracle_mean,
                       const Field& mask);

}  // namespace artlab
