#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace artlab {

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

struct FileEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uint64_t bytes = 0;
};

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Recomputes the hash of every file listed in manifest.json under `dir`.
VerifyResult verify_manifest(const std::filesystem::path& manifest_path);

}  // namespace artlab
