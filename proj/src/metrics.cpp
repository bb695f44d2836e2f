#include "artlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "artlab/error.hpp"

namespace artlab {

double psnr(const Field& a, const Field& b, double peak) {
  require_same_shape(a, b, "psnr");
  if (!(peak > 0.0)) throw ValidationError("psnr needs peak > 0");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

int reflect(int i, int n) {
  // Symmetric reflection: ... b a | a b c ... c b | b a
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

}  // namespace

double ssim(const Field& a, const Field& b, int window, double data_range) {
  require_same_shape(a, b, "ssim");
  if (window < 1) throw ValidationError("ssim window must be >= 1");
  if (!(data_range > 0.0)) throw ValidationError("ssim data_range must be > 0");
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  const int h = a.height();
  const int w = a.width();
  const int lo = -(window / 2);
  const int hi = lo + window;
  const double n = static_cast<double>(window) * window;
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int dy = lo; dy < hi; ++dy) {
          const int yy = reflect(y + dy, h);
          for (int dx = lo; dx < hi; ++dx) {
            const int xx = reflect(x + dx, w);
            const double va = a(c, yy, xx);
            const double vb = b(c, yy, xx);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        }
        const double mu_a = sa / n;
        const double mu_b = sb / n;
        const double var_a = saa / n - mu_a * mu_a;
        const double var_b = sbb / n - mu_b * mu_b;
        const double cov = sab / n - mu_a * mu_b;
        total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                 ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      }
    }
  }
  return total / static_cast<double>(a.size());
}

Field gradient_magnitude(const Field& x) {
  const int h = x.height();
  const int w = x.width();
  Field g(Shape{1, h, w});
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        double dx = 0.0;
        double dy = 0.0;
        if (w > 1) dx = xx + 1 < w ? x(c, y, xx + 1) - x(c, y, xx) : x(c, y, xx) - x(c, y, xx - 1);
        if (h > 1) dy = y + 1 < h ? x(c, y + 1, xx) - x(c, y, xx) : x(c, y, xx) - x(c, y - 1, xx);
        g(0, y, xx) += std::hypot(dx, dy) / x.channels();
      }
    }
  }
  return g;
}

BoundaryRegions::BoundaryRegions(const Field& mask, int band)
    : height_(mask.height()), width_(mask.width()) {
  if (band < 1) throw ValidationError("boundary band must be >= 1");
  require_binary(mask, "boundary_score");
  for (int c = 1; c < mask.channels(); ++c) {
    if (!std::equal(mask.plane(c).begin(), mask.plane(c).end(), mask.plane(0).begin())) {
      throw ValidationError("boundary_score needs a channel-uniform mask");
    }
  }
  const int h = height_;
  const int w = width_;
  const auto plane = mask.plane(0);
  const std::size_t n = plane.size();
  constexpr int kUnset = std::numeric_limits<int>::max();
  std::vector<int> dist(n, kUnset);
  std::deque<std::size_t> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const int nb[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[0] >= h || q[1] < 0 || q[1] >= w) continue;
        if (plane[static_cast<std::size_t>(q[0]) * w + q[1]] != plane[p]) {
          dist[p] = 0;
          queue.push_back(p);
          break;
        }
      }
    }
  }
  if (queue.empty()) throw UndefinedScoreError("mask has no boundary");
  while (!queue.empty()) {
    const std::size_t p = queue.front();
    queue.pop_front();
    const int y = static_cast<int>(p) / w;
    const int x = static_cast<int>(p) % w;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int yy = y + dy;
        const int xx = x + dx;
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
        const std::size_t q = static_cast<std::size_t>(yy) * w + xx;
        if (dist[q] == kUnset) {
          dist[q] = dist[p] + 1;
          queue.push_back(q);
        }
      }
    }
  }
  std::vector<std::size_t> far;
  for (std::size_t p = 0; p < n; ++p) {
    if (dist[p] < band) band_.push_back(p);
    else if (dist[p] >= 2 * band) far.push_back(p);
  }
  std::stable_sort(far.begin(), far.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  if (far.size() > band_.size()) far.resize(band_.size());
  reference_ = std::move(far);
  if (reference_.empty()) throw UndefinedScoreError("mask leaves no interior reference band");
}

double BoundaryRegions::score(const Field& x) const {
  if (x.height() != height_ || x.width() != width_) {
    throw DimensionError("boundary_score: field does not match mask geometry");
  }
  const Field g = gradient_magnitude(x);
  auto mean_over = [&](const std::vector<std::size_t>& px) {
    double s = 0.0;
    for (auto p : px) s += g[p];
    return s / static_cast<double>(px.size());
  };
  return mean_over(band_) - mean_over(reference_);
}

BoundaryScore boundary_score(const Field& x, const Field& mask, int band) {
  if (x.height() != mask.height() || x.width() != mask.width()) {
    throw DimensionError("boundary_score: field and mask sizes differ");
  }
  const BoundaryRegions regions(mask, band);
  return {regions.score(x), gradient_magnitude(x)};
}

double posterior_error(const std::vector<Field>& samples, const Field& oracle_mean,
                       const Field& mask) {
  if (samples.empty()) throw ValidationError("posterior_error needs at least one sample");
  require_same_shape(oracle_mean, mask, "posterior_error");
  Field avg(oracle_mean.shape());
  for (const auto& s : samples) avg += s;
  avg *= 1.0 / static_cast<double>(samples.size());
  double se = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < avg.size(); ++i) {
    if (mask[i] == 0.0) {
      const double d = avg[i] - oracle_mean[i];
      se += d * d;
      ++count;
    }
  }
  return count == 0 ? 0.0 : std::sqrt(se / static_cast<double>(count));
}

}  // namespace artlab
