#include "artlab/patterns.hpp"

#include <cmath>
#include <numbers>

#include "artlab/error.hpp"

namespace artlab::patterns {

Field constant(const Shape& shape, double value) { return Field(shape, value); }

Field gradient(const Shape& shape, double from, double to, Axis axis) {
  Field f(shape);
  const double hy = shape.height > 1 ? shape.height - 1 : 1;
  const double wx = shape.width > 1 ? shape.width - 1 : 1;
  for (int c = 0; c < shape.channels; ++c) {
    for (int y = 0; y < shape.height; ++y) {
      for (int x = 0; x < shape.width; ++x) {
        double u = 0.0;
        switch (axis) {
          case Axis::x: u = x / wx; break;
          case Axis::y: u = y / hy; break;
          case Axis::diagonal: u = 0.5 * (x / wx + y / hy); break;
        }
        f(c, y, x) = from + u * (to - from);
      }
    }
  }
  return f;
}

Field sinusoid(const Shape& shape, double amplitude, double period, double angle_deg,
               double phase, double offset) {
  if (!(period > 0.0)) throw ValidationError("sinusoid period must be > 0");
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double ca = std::cos(a);
  const double sa = std::sin(a);
  Field f(shape);
  for (int c = 0; c < shape.channels; ++c)
    for (int y = 0; y < shape.height; ++y)
      for (int x = 0; x < shape.width; ++x)
        f(c, y, x) =
            offset + amplitude * std::sin(2.0 * std::numbers::pi * (x * ca + y * sa) / period + phase);
  return f;
}

Field checkerboard(const Shape& shape, double amplitude, int cell) {
  if (cell < 1) throw ValidationError("checkerboard cell must be >= 1");
  Field f(shape);
  for (int c = 0; c < shape.channels; ++c)
    for (int y = 0; y < shape.height; ++y)
      for (int x = 0; x < shape.width; ++x)
        f(c, y, x) = ((x / cell + y / cell) % 2 == 0) ? amplitude : -amplitude;
  return f;
}

Field half_plane_mask(const Shape& shape, double split, Axis axis) {
  if (!(split >= 0.0 && split <= 1.0)) throw ValidationError("half-plane split must lie in [0,1]");
  Field m(shape);
  for (int c = 0; c < shape.channels; ++c)
    for (int y = 0; y < shape.height; ++y)
      for (int x = 0; x < shape.width; ++x) {
        double u = 0.0;
        switch (axis) {
          case Axis::x: u = (x + 0.5) / shape.width; break;
          case Axis::y: u = (y + 0.5) / shape.height; break;
          case Axis::diagonal:
            u = 0.5 * ((x + 0.5) / shape.width + (y + 0.5) / shape.height);
            break;
        }
        m(c, y, x) = u < split ? 1.0 : 0.0;
      }
  return m;
}

Field rectangle_mask(const Shape& shape, double y0, double x0, double y1, double x1) {
  if (!(0.0 <= y0 && y0 <= y1 && y1 <= 1.0 && 0.0 <= x0 && x0 <= x1 && x1 <= 1.0)) {
    throw ValidationError("rectangle bounds must satisfy 0 <= lo <= hi <= 1");
  }
  Field m(shape, 1.0);
  for (int c = 0; c < shape.channels; ++c)
    for (int y = 0; y < shape.height; ++y)
      for (int x = 0; x < shape.width; ++x) {
        const double v = (y + 0.5) / shape.height;
        const double u = (x + 0.5) / shape.width;
        if (v >= y0 && v < y1 && u >= x0 && u < x1) m(c, y, x) = 0.0;
      }
  return m;
}

Field garment_mask(const Shape& shape) {
  Field m(shape, 1.0);
  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) {
      const double v = (y + 0.5) / shape.height;
      const double u = (x + 0.5) / shape.width;
      const bool torso = u >= 0.30 && u < 0.70 && v >= 0.30 && v < 0.88;
      // Sleeves hang outward and down from the shoulder line.
      const double reach = std::abs(u - 0.5);
      const bool sleeve = reach >= 0.20 && reach < 0.36 && v >= 0.30 + 0.6 * (reach - 0.20) &&
                          v < 0.52 + 0.6 * (reach - 0.20);
      const double du = u - 0.5;
      const double dv = v - 0.30;
      const bool neckline = du * du + dv * dv < 0.11 * 0.11;
      if ((torso || sleeve) && !neckline) {
        for (int c = 0; c < shape.channels; ++c) m(c, y, x) = 0.0;
      }
    }
  }
  return m;
}

}  // namespace artlab::patterns
