#ifndef MJP_MODEL_IO_HPP
#define MJP_MODEL_IO_HPP

#include "mjp/mdp.hpp"
#include "mjp/qkernel.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace mjp {

/// Whole file as a string; ConfigurationError when unreadable.
std::string read_file(const std::string& path);

/// JSON document; ParseError carries line and column of syntax errors.
nlohmann::json parse_json(const std::string& text, const std::string& source);
nlohmann::json read_json(const std::string& path);

/// {"states":[...], "window":{"t0":0,"t1":null}, "kernel":{"type":...}}
RateKernel parse_kernel(const nlohmann::json& doc);
RateKernel load_kernel(const std::string& path);

struct MdpFile {
  MdpModel model;
  std::optional<CostModel> cost;
  std::optional<RowVector> initial;
};

/// {"states":[...], "actions":[...], "available":{x:[a...]},
///  "default_action":{x:a}, "rates":{"x,a":{y:rate}}, "costs":{...},
///  "initial":{x:p}} or {"generator":"bench3"|"controlled-birth", ...}.
MdpFile parse_mdp(const nlohmann::json& doc);
MdpFile load_mdp(const std::string& path);

/// Probability vector from {label: p} over the model states.
RowVector parse_distribution(const nlohmann::json& j, const StateSpace& space,
                             const std::string& where);

}  // namespace mjp

#endif  // MJP_MODEL_IO_HPP
