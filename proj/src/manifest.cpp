#include "orbitq/manifest.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "orbitq/error.hpp"

namespace orbitq {

namespace {

std::string digest_hex(const unsigned char* md, unsigned int len) {
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return out.str();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericError("SHA-256 digest failed");
  return digest_hex(md, len);
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "' for hashing");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

RunManifest::RunManifest(std::string command, std::string output_dir)
    : output_dir_(std::move(output_dir)), start_(std::chrono::steady_clock::now()) {
  doc_["tool"] = "orbitq";
  doc_["version"] = kVersion;
  doc_["command"] = std::move(command);
  doc_["started_utc"] = utc_now();
#ifdef _OPENMP
  doc_["threads"] = omp_get_max_threads();
#else
  doc_["threads"] = 1;
#endif
  doc_["resolved_config"] = nlohmann::json::object();
  doc_["diagnostics"] = nlohmann::json::object();
  doc_["outputs"] = nlohmann::json::array();
  doc_["status"] = "ok";
}

void RunManifest::add_output(const std::string& relative_path) {
  const auto full = std::filesystem::path(output_dir_) / relative_path;
  doc_["outputs"].push_back({{"path", relative_path},
                             {"bytes", std::filesystem::file_size(full)},
                             {"sha256", sha256_file(full.string())}});
}

void RunManifest::set_status(const std::string& status, const std::string& error) {
  doc_["status"] = status;
  if (!error.empty()) doc_["error"] = error;
}

std::string RunManifest::write() {
  doc_["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  std::filesystem::create_directories(output_dir_);
  const auto path = (std::filesystem::path(output_dir_) / "manifest.json").string();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << doc_.dump(2) << '\n';
  return path;
}

}  // namespace orbitq
