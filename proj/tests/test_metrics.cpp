#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "artlab/error.hpp"
#include "artlab/measurement.hpp"
#include "artlab/metrics.hpp"
#include "artlab/patterns.hpp"
#include "artlab/rng.hpp"
#include "artlab/score.hpp"
#include "support/oracle.hpp"

using namespace artlab;

TEST_SUITE("metrics") {
  TEST_CASE("psnr") {
    const Shape shape{1, 4, 4};
    CounterRng rng(1);
    const Field a = rng.normal_field(shape);
    CHECK(psnr(a, a, 1.0) == std::numeric_limits<double>::infinity());
    CHECK(psnr(Field(shape), Field(shape, 1.0), 1.0) == doctest::Approx(0.0));
    CHECK(psnr(Field(shape), Field(shape, 0.5), 1.0) == doctest::Approx(6.0206).epsilon(1e-4));
    const Field b = rng.normal_field(shape);
    CHECK(psnr(a, b, 1.0) == psnr(b, a, 1.0));
    CHECK_THROWS_AS(psnr(a, Field(Shape{1, 4, 3}), 1.0), DimensionError);
  }

  TEST_CASE("ssim") {
    const Shape shape{1, 12, 12};
    const Field a = patterns::sinusoid(shape, 0.3, 5.0, 20.0, 0.0, 0.5);
    CHECK(ssim(a, a) == doctest::Approx(1.0));
    CounterRng rng(2);
    const Field noisy = a + 0.2 * rng.normal_field(shape);
    CHECK(ssim(a, noisy) < 0.9);
    CHECK(ssim(a, noisy) == doctest::Approx(ssim(noisy, a)));
    CHECK_THROWS_AS(ssim(a, Field(Shape{1, 12, 11})), DimensionError);
  }

  TEST_CASE("boundary score: flat and smooth fields") {
    const Shape shape{1, 16, 16};
    const Field mask = patterns::half_plane_mask(shape, 0.5, patterns::Axis::x);
    CHECK(boundary_score(Field(shape, 0.7), mask).score == doctest::Approx(0.0));
    const Field ramp = patterns::gradient(shape, 0.0, 1.0, patterns::Axis::x);
    CHECK(std::abs(boundary_score(ramp, mask).score) <= 1e-12);
    const Field garment = patterns::garment_mask(shape);
    CHECK(std::abs(boundary_score(ramp, garment).score) <= 1e-12);
  }

  TEST_CASE("boundary score: step at the boundary") {
    const Shape shape{1, 8, 8};
    const Field mask = patterns::half_plane_mask(shape, 0.5, patterns::Axis::x);
    const double h = 0.4;
    Field x(shape);
    for (int yy = 0; yy < 8; ++yy) {
      for (int xx = 0; xx < 8; ++xx) x(0, yy, xx) = mask(0, yy, xx) == 1.0 ? 1.0 : 1.0 + h;
    }
    // Only pixels whose forward difference crosses the mask edge see a gradient.
    const BoundaryRegions regions(mask, 1);
    std::size_t crossing = 0;
    for (auto p : regions.band_pixels()) {
      const int col = static_cast<int>(p % 8);
      if (col + 1 < 8 && mask[p] != mask[p + 1]) ++crossing;
    }
    const double fraction =
        static_cast<double>(crossing) / static_cast<double>(regions.band_pixels().size());
    CHECK(fraction == doctest::Approx(0.5));
    CHECK(boundary_score(x, mask).score == doctest::Approx(h * fraction).epsilon(1e-12));
    CHECK(regions.score(x) == boundary_score(x, mask).score);
  }

  TEST_CASE("boundary score invariances") {
    const Shape shape{1, 16, 16};
    const Field mask = patterns::garment_mask(shape);
    CounterRng rng(3);
    const Field x = rng.normal_field(shape);
    CHECK(boundary_score(x + Field(shape, 3.0), mask).score ==
          doctest::Approx(boundary_score(x, mask).score).epsilon(1e-12));

    const Field smooth = patterns::sinusoid(shape, 0.2, 9.0, 30.0, 0.3, 0.5);
    for (const Field& m : {mask, patterns::half_plane_mask(shape, 0.5, patterns::Axis::y),
                           patterns::rectangle_mask(shape, 0.2, 0.3, 0.7, 0.8)}) {
      const Measurement meas = make_measurement(Field(shape, 0.9), m, Codec::identity());
      CHECK(boundary_score(posthoc_replace(smooth, meas), m).score >=
            boundary_score(smooth, m).score);
    }
  }

  TEST_CASE("boundary score errors") {
    const Shape shape{1, 8, 8};
    CHECK_THROWS_AS(boundary_score(Field(shape), Field(shape, 1.0)), UndefinedScoreError);
    CHECK_THROWS_AS(boundary_score(Field(shape), Field(shape)), UndefinedScoreError);
    CHECK_THROWS_AS(boundary_score(Field(Shape{1, 8, 7}),
                                   patterns::half_plane_mask(shape, 0.5, patterns::Axis::x)),
                    DimensionError);
    CHECK_THROWS_AS(boundary_score(Field(shape), patterns::half_plane_mask(shape, 0.5,
                                                                           patterns::Axis::x),
                                   0),
                    ValidationError);
  }

  TEST_CASE("posterior error") {
    const Shape shape{1, 3, 3};
    const Field mask = patterns::half_plane_mask(shape, 0.5, patterns::Axis::x);
    const Field mean = patterns::gradient(shape, -1.0, 1.0, patterns::Axis::y);
    CHECK(posterior_error({mean}, mean, mask) == 0.0);
    const Field d(shape, 0.25);
    CHECK(posterior_error({mean + d, mean - d}, mean, mask) == doctest::Approx(0.0));
    CHECK(posterior_error({mean + d}, mean, mask) == doctest::Approx(0.25));
    CHECK_THROWS_AS(posterior_error({}, mean, mask), ValidationError);
  }

  TEST_CASE("posterior error of exact posterior draws meets the central-limit bound") {
    const Shape shape{1, 6, 6};
    const auto prior = GaussianPrior::dense(
        Field(shape, 0.5), squared_exponential_covariance(shape, 0.25, 2.0, 1e-3));
    const Field mask = patterns::rectangle_mask(shape, 0.25, 0.25, 0.75, 0.75);
    CounterRng rng(4);
    const Field y = hadamard(mask, prior.sample(rng));
    const auto post = oracle::masked_posterior(prior, mask, y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(post.covariance);
    const Eigen::MatrixXd root =
        eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const int n = 1000;
    std::vector<Field> draws;
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd e(root.cols());
      for (Eigen::Index j = 0; j < e.size(); ++j) e(j) = rng.normal();
      draws.push_back(oracle::from_vector(shape, oracle::to_vector(post.mean) + root * e));
    }
    double var = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i] == 0.0) {
        var += post.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        ++count;
      }
    }
    const double bound = 3.0 * std::sqrt(var / count) / std::sqrt(static_cast<double>(n));
    CHECK(posterior_error(draws, post.mean, mask) <= bound);
  }
}
