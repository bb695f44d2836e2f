#include "artlab/field_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "artlab/error.hpp"

namespace artlab::io {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_dump(const Field& f) {
  std::vector<std::uint8_t> out;
  out.reserve(kDumpHeaderBytes + 8 * f.size());
  out.insert(out.end(), std::begin(kDumpMagic), std::end(kDumpMagic));
  put_u32(out, static_cast<std::uint32_t>(f.channels()));
  put_u32(out, static_cast<std::uint32_t>(f.height()));
  put_u32(out, static_cast<std::uint32_t>(f.width()));
  for (double v : f.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

Field decode_dump(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kDumpHeaderBytes || std::memcmp(bytes.data(), kDumpMagic, 4) != 0) {
    throw IoError("not a field dump (bad magic or truncated header)");
  }
  const Shape shape{static_cast<int>(get_u32(bytes.data() + 4)),
                    static_cast<int>(get_u32(bytes.data() + 8)),
                    static_cast<int>(get_u32(bytes.data() + 12))};
  if (shape.channels < 1 || shape.height < 1 || shape.width < 1) {
    throw IoError("field dump declares an invalid shape " + shape.str());
  }
  if (bytes.size() != kDumpHeaderBytes + 8 * shape.size()) {
    throw IoError("field dump payload length does not match shape " + shape.str());
  }
  std::vector<double> values(shape.size());
  const std::uint8_t* p = bytes.data() + kDumpHeaderBytes;
  for (std::size_t k = 0; k < values.size(); ++k, p += 8) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    values[k] = std::bit_cast<double>(bits);
  }
  return Field(shape, std::move(values));
}

void write_dump(const std::filesystem::path& path, const Field& f) {
  write_bytes(path, encode_dump(f));
}

Field read_dump(const std::filesystem::path& path) { return decode_dump(read_bytes(path)); }

std::vector<std::uint8_t> encode_pnm(const Field& f, double lo, double hi) {
  const bool color = f.channels() == 3;
  const int rows = color ? f.height() : f.height() * f.channels();
  const std::string header = std::string(color ? "P6" : "P5") + "\n" +
                             std::to_string(f.width()) + " " + std::to_string(rows) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const double span = hi > lo ? hi - lo : 1.0;
  auto quantize = [&](double v) {
    const double u = std::clamp((v - lo) / span, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(u * 255.0));
  };
  if (color) {
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x)
        for (int c = 0; c < 3; ++c) out.push_back(quantize(f(c, y, x)));
  } else {
    for (double v : f.values()) out.push_back(quantize(v));
  }
  return out;
}

void write_pnm(const std::filesystem::path& path, const Field& f, double lo, double hi) {
  write_bytes(path, encode_pnm(f, lo, hi));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace artlab::io
