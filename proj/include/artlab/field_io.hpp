#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "artlab/field.hpp"

namespace artlab::io {

/// Raw dump layout: 4-byte magic "ARTF", then channels, height, width as
/// little-endian int32, then channels*height*width little-endian float64.
inline constexpr char kDumpMagic[4] = {'A', 'R', 'T', 'F'};
inline constexpr std::size_t kDumpHeaderBytes = 16;

std::vector<std::uint8_t> encode_dump(const Field& f);
Field decode_dump(const std::vector<std::uint8_t>& bytes);

void write_dump(const std::filesystem::path& path, const Field& f);
Field read_dump(const std::filesystem::path& path);

/// Binary PGM (1 channel) or PPM (3 channels); other channel counts are
/// stacked vertically as a single PGM. Values are mapped linearly from
/// [lo, hi] to [0, 255] and clamped.
std::vector<std::uint8_t> encode_pnm(const Field& f, double lo, double hi);
void write_pnm(const std::filesystem::path& path, const Field& f, double lo, double hi);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace artlab::io
