#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "json.hpp"

namespace orbitq {

inline constexpr const char* kVersion = "0.1.0";

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Machine-readable record of one invocation: resolved configuration,
/// timings, diagnostics and every file written, each with its digest.
class RunManifest {
 public:
  RunManifest(std::string command, std::string output_dir);

  nlohmann::json& resolved_config() { return doc_["resolved_config"]; }
  nlohmann::json& diagnostics() { return doc_["diagnostics"]; }
  // Path relative to the output directory.
  void add_output(const std::string& relative_path);
  void set_status(const std::string& status, const std::string& error = "");
  // Stamps wall time and writes manifest.json into the output directory.
  std::string write();
  const nlohmann::json& json() const { return doc_; }

 private:
  std::string output_dir_;
  nlohmann::json doc_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace orbitq
