#include <doctest.h>

#include <cmath>

#include "artlab/error.hpp"
#include "artlab/rng.hpp"
#include "artlab/schedule.hpp"

using namespace artlab;

TEST_SUITE("schedule") {
  TEST_CASE("constant schedule cumulative product") {
    const auto s = NoiseSchedule::make(ScheduleKind::constant, 3, 0.5, 0.5);
    CHECK(s.alpha_bar(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.alpha_bar(1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.alpha_bar(2) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(s.alpha_bar(-1) == 1.0);
  }

  TEST_CASE("linear schedule hand product") {
    const auto s = NoiseSchedule::make(ScheduleKind::linear, 2, 0.1, 0.3);
    CHECK(s.beta(0) == doctest::Approx(0.1));
    CHECK(s.beta(1) == doctest::Approx(0.3));
    CHECK(s.alpha_bar(0) == doctest::Approx(0.9));
    CHECK(s.alpha_bar(1) == doctest::Approx(0.63));
  }

  TEST_CASE("scaled_linear interpolates in sqrt(beta)") {
    const auto s = NoiseSchedule::make(ScheduleKind::scaled_linear, 1000, 8.5e-4, 1.2e-2);
    CHECK(s.beta(0) == doctest::Approx(8.5e-4));
    CHECK(s.beta(999) == doctest::Approx(1.2e-2));
    const double mid = std::sqrt(8.5e-4) + (499.0 / 999.0) * (std::sqrt(1.2e-2) - std::sqrt(8.5e-4));
    CHECK(s.beta(499) == doctest::Approx(mid * mid));
  }

  TEST_CASE("invariants hold for every kind") {
    for (auto kind : {ScheduleKind::constant, ScheduleKind::linear, ScheduleKind::scaled_linear}) {
      const auto s = NoiseSchedule::make(kind, 200, 1e-3, 2e-2);
      CHECK(s.alpha_bar(0) == s.alpha(0));
      for (int t = 0; t < 200; ++t) {
        CHECK(s.beta(t) > 0.0);
        CHECK(s.beta(t) < 1.0);
        if (t > 0) {
          CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
          CHECK(s.posterior_variance(t) >= 0.0);
          CHECK(s.posterior_variance(t) <= s.beta(t));
        }
      }
      CHECK(s.posterior_variance(0) == 0.0);
    }
  }

  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(NoiseSchedule::make(ScheduleKind::linear, 1, 0.1, 0.2), ValidationError);
    CHECK_THROWS_AS(NoiseSchedule::make(ScheduleKind::linear, 10, 0.0, 0.2), ValidationError);
    CHECK_THROWS_AS(NoiseSchedule::make(ScheduleKind::linear, 10, 0.3, 0.2), ValidationError);
    CHECK_THROWS_AS(NoiseSchedule::make(ScheduleKind::linear, 10, 0.1, 1.0), ValidationError);
    CHECK_THROWS_AS(NoiseSchedule::from_alpha_bar({0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(schedule_kind_from_string("cosine"), ValidationError);
  }

  TEST_CASE("forward_noise examples") {
    const auto s = NoiseSchedule::from_alpha_bar({1.0, 0.25});
    const Field ones(Shape{1, 2, 2}, 1.0);
    const Field out = forward_noise(ones, 1, ones, s);
    for (double v : out.values()) CHECK(v == doctest::Approx(0.5 + std::sqrt(0.75)));
    CHECK(forward_noise(ones, 0, ones, s) == ones);
    const Field zero(Shape{1, 2, 2}, 0.0);
    CHECK(forward_noise(ones, 1, zero, s) == Field(Shape{1, 2, 2}, 0.5));
    CHECK_THROWS_AS(forward_noise(ones, 2, ones, s), ValidationError);
    CHECK_THROWS_AS(forward_noise(ones, 1, Field(Shape{1, 1, 1}), s), DimensionError);
  }

  TEST_CASE("forward_noise preserves unit variance") {
    const auto s = NoiseSchedule::make(ScheduleKind::scaled_linear, 1000, 8.5e-4, 1.2e-2);
    CounterRng rng(17);
    const Shape shape{1, 100, 100};
    for (int t : {0, 250, 999}) {
      const Field out = forward_noise(rng.normal_field(shape), t, rng.normal_field(shape), s);
      const double m = mean(out);
      double var = 0.0;
      for (double v : out.values()) var += (v - m) * (v - m);
      var /= static_cast<double>(out.size() - 1);
      CHECK(std::abs(var - 1.0) < 0.02);
    }
  }

  TEST_CASE("plans for the two start conventions") {
    const auto s = NoiseSchedule::make(ScheduleKind::scaled_linear, 1000, 8.5e-4, 1.2e-2);
    const auto a = make_plan(s, 50, 999);
    REQUIRE(a.size() == 50);
    CHECK(a.start_index() == 999);
    CHECK(a.current(1) == 979);
    CHECK(a.timesteps.back() == 19);
    CHECK(a.previous(49) == -1);
    const auto b = make_plan(s, 50, 981);
    CHECK(b.timesteps.back() == 1);
    const auto c = make_plan(s, 3, 999, 333);
    CHECK(c.timesteps == std::vector<int>{999, 666, 333});
  }

  TEST_CASE("plan validation") {
    const auto s = NoiseSchedule::make(ScheduleKind::linear, 100, 1e-3, 2e-2);
    CHECK_THROWS_AS(make_plan(s, 0, 99), ValidationError);
    CHECK_THROWS_AS(make_plan(s, 10, 100), ValidationError);
    CHECK_THROWS_AS(make_plan(s, 50, 40, 1), ValidationError);
    TimestepPlan bad{{5, 5, 3}};
    CHECK_THROWS_AS(bad.validate(s), ValidationError);
  }

  TEST_CASE("rng streams are deterministic and independent") {
    CounterRng a(5, 1), b(5, 1), c(5, 2);
    for (int i = 0; i < 10; ++i) {
      const auto x = a.next_u64();
      CHECK(x == b.next_u64());
      CHECK(x != c.next_u64());
    }
    CounterRng u(9);
    for (int i = 0; i < 1000; ++i) {
      const double v = u.uniform();
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }

  TEST_CASE("rng normals have unit moments") {
    CounterRng rng(21);
    const Field f = rng.normal_field(Shape{1, 200, 200});
    const double m = mean(f);
    CHECK(std::abs(m) < 0.02);
    CHECK(std::abs(sum_squares(f) / f.size() - 1.0) < 0.02);
  }
}
