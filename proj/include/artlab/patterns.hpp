#pragma once

#include "artlab/field.hpp"

namespace artlab::patterns {

Field constant(const Shape& shape, double value);

enum class Axis { x, y, diagonal };

/// Linear ramp from `from` to `to` across the grid along `axis`.
Field gradient(const Shape& shape, double from, double to, Axis axis);

/// offset + amplitude * sin(2 pi (u cos a + v sin a) / period + phase), with (u, v)
/// pixel coordinates, `period` in pixels and `angle_deg` in degrees.
Field sinusoid(const Shape& shape, double amplitude, double period, double angle_deg,
               double phase, double offset = 0.0);

/// +amplitude / -amplitude on alternating cells of `cell` pixels.
Field checkerboard(const Shape& shape, double amplitude, int cell = 1);

/// Measured (1) on the first `split` fraction of the axis, 0 beyond.
Field half_plane_mask(const Shape& shape, double split, Axis axis);

/// Measured everywhere except the rectangle [y0, y1) x [x0, x1) given in
/// fractions of the grid.
Field rectangle_mask(const Shape& shape, double y0, double x0, double y1, double x1);

/// Measured everywhere except an upper-body garment silhouette (torso,
/// sleeves, with the neckline left measured).
Field garment_mask(const Shape& shape);

}  // namespace artlab::patterns
