#include "artlab/manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <json.hpp>

#include "artlab/error.hpp"
#include "artlab/field_io.hpp"

namespace artlab {

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

VerifyResult verify_manifest(const std::filesystem::path& manifest_path) {
  const auto text = io::read_bytes(manifest_path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw IoError("manifest " + manifest_path.string() + " is not valid JSON: " + e.what());
  }
  VerifyResult result;
  const auto dir = manifest_path.parent_path();
  for (const auto& entry : manifest.at("files")) {
    const std::string rel = entry.at("path").get<std::string>();
    const auto full = dir / rel;
    if (!std::filesystem::exists(full)) {
      result.ok = false;
      result.problems.push_back("missing: " + rel);
      continue;
    }
    const auto bytes = io::read_bytes(full);
    if (bytes.size() != entry.at("bytes").get<std::uint64_t>() ||
        sha256_hex(bytes) != entry.at("sha256").get<std::string>()) {
      result.ok = false;
      result.problems.push_back("hash mismatch: " + rel);
    }
  }
  return result;
}

}  // namespace artlab
