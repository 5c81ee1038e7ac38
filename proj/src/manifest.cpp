#include "mjp/manifest.hpp"

#include "mjp/errors.hpp"
#include "mjp/model_io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace mjp {

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command}, {"argv", argv},   {"model", model_path},
          {"model_sha256", model_digest}, {"params", params}, {"version", version}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.model_path = j.value("model", "");
    m.model_digest = j.value("model_sha256", "");
    m.params = j.value("params", std::map<std::string, std::string>{});
    m.version = j.value("version", "");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest", e.what());
  }
  return m;
}

void RunManifest::write(const std::string& path) const {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write '" + path + "'");
  out << to_json().dump(2) << "\n";
}

RunManifest RunManifest::read(const std::string& path) { return from_json(read_json(path)); }

void RunManifest::check_model() const {
  if (model_path.empty()) return;
  if (sha256_hex(read_file(model_path)) != model_digest)
    throw ValidationError("model file '" + model_path + "' changed since the run");
}

std::string output_dir(const std::string& fallback) {
  const char* env = std::getenv("MJP_OUT_DIR");
  return env && *env ? std::string(env) : fallback;
}

}  // namespace mjp
