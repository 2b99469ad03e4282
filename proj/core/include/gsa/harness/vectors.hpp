#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gsa::harness {

/// Writes params.json, keys.json, signatures.json, messages.json,
/// frames.json and a sha256sum-style MANIFEST. Same seed, same bytes.
std::vector<std::filesystem::path> emit_vectors(const std::filesystem::path& out_dir, std::uint64_t seed = 1);

struct VectorCheckReport {
  std::size_t checks = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty() && checks > 0; }
};

/// Re-derives and re-verifies everything in a vector directory.
VectorCheckReport check_vectors(const std::filesystem::path& dir);

}  // namespace gsa::harness
