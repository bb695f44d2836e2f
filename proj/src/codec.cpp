#include "artlab/codec.hpp"

#include "artlab/error.hpp"

namespace artlab {

std::string to_string(CodecKind kind) {
  return kind == CodecKind::identity ? "identity" : "blockmean";
}

CodecKind codec_kind_from_string(const std::string& name) {
  if (name == "identity") return CodecKind::identity;
  if (name == "blockmean") return CodecKind::blockmean;
  throw ValidationError("unknown codec kind '" + name + "'");
}

void Codec::validate() const {
  if (kind == CodecKind::blockmean && factor < 1) {
    throw ValidationError("blockmean factor must be >= 1");
  }
  if (!(sigma_e > 0.0)) throw ValidationError("codec sigma_E must be positive");
}

Shape Codec::latent_shape(const Shape& pixel) const {
  validate();
  const int f = scale();
  if (pixel.height % f != 0 || pixel.width % f != 0) {
    throw ValidationError("blockmean factor " + std::to_string(f) + " does not divide " +
                          pixel.str());
  }
  return {pixel.channels, pixel.height / f, pixel.width / f};
}

Shape Codec::pixel_shape(const Shape& latent) const {
  validate();
  return {latent.channels, latent.height * scale(), latent.width * scale()};
}

Field Codec::encode(const Field& x) const {
  const Shape ls = latent_shape(x.shape());
  if (kind == CodecKind::identity || factor == 1) return x;
  const int f = factor;
  const double n = static_cast<double>(f) * f;
  Field z(ls);
  for (int c = 0; c < ls.channels; ++c) {
    for (int by = 0; by < ls.height; ++by) {
      for (int bx = 0; bx < ls.width; ++bx) {
        // Mean as anchor + average deviation: exact for constant blocks.
        const double anchor = x(c, by * f, bx * f);
        double dev = 0.0;
        for (int dy = 0; dy < f; ++dy)
          for (int dx = 0; dx < f; ++dx) dev += x(c, by * f + dy, bx * f + dx) - anchor;
        z(c, by, bx) = anchor + dev / n;
      }
    }
  }
  return z;
}

Field Codec::decode(const Field& z) const {
  validate();
  if (kind == CodecKind::identity || factor == 1) return z;
  const int f = factor;
  Field x(pixel_shape(z.shape()));
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < x.height(); ++y)
      for (int xx = 0; xx < x.width(); ++xx) x(c, y, xx) = z(c, y / f, xx / f);
  return x;
}

Field Codec::downsample_mask(const Field& mask) const {
  require_binary(mask, "downsample_mask");
  Field m = encode(mask);
  for (double& v : m.values()) v = v >= 0.5 ? 1.0 : 0.0;
  return m;
}

Field Codec::downsample_observation(const Field& y, const Field& mask) const {
  require_same_shape(y, mask, "downsample_observation");
  const Field latent_mask = downsample_mask(mask);
  if (kind == CodecKind::identity || factor == 1) return hadamard(latent_mask, y);
  const Field coverage = encode(mask);
  const Field sums = encode(hadamard(mask, y));
  Field out(latent_mask.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = latent_mask[i] == 1.0 ? sums[i] / coverage[i] : 0.0;
  }
  return out;
}

}  // namespace artlab
