#ifndef MJP_MANIFEST_HPP
#define MJP_MANIFEST_HPP

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace mjp {

inline constexpr const char* kVersion = "0.1.0";

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Shortest round-tripping decimal for a double.
std::string format_real(double v);

/// Everything needed to rerun a command: the argument vector, the digest of
/// the model file it read and the resolved parameters.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string model_path;
  std::string model_digest;
  std::map<std::string, std::string> params;
  std::string version = kVersion;

  void set(const std::string& key, double v) { params[key] = format_real(v); }
  void set(const std::string& key, const std::string& v) { params[key] = v; }

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  void write(const std::string& path) const;
  static RunManifest read(const std::string& path);

  /// ValidationError when the model file no longer matches the digest.
  void check_model() const;
};

/// Directory for run artefacts: MJP_OUT_DIR if set, else `fallback`.
std::string output_dir(const std::string& fallback);

}  // namespace mjp

#endif  // MJP_MANIFEST_HPP
