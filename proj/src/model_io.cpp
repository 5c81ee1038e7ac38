#include "mjp/model_io.hpp"

#include "mjp/generators.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace mjp {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(col),
                     "invalid JSON");
  }
}

json read_json(const std::string& path) { return parse_json(read_file(path), path); }

namespace {

const json& need(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + "." + key, "missing field");
  return j.at(key);
}

Real number(const json& j, const std::string& where) {
  if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "infinity"))
    return kInf;
  if (!j.is_number()) throw ParseError(where, "expected a number");
  return j.get<Real>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw ParseError(where, "expected a string");
  return j.get<std::string>();
}

Index lookup(const StateSpace& s, const std::string& label, const std::string& where) {
  for (Index i = 0; i < s.size(); ++i)
    if (s.labels[i] == label) return i;
  throw ParseError(where, "unknown state '" + label + "'");
}

StateSpace parse_states(const json& doc, const std::string& where) {
  const json& st = need(doc, "states", where);
  if (!st.is_array() || st.empty()) throw ParseError(where + ".states", "expected a non-empty array");
  StateSpace s;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const auto w = where + ".states[" + std::to_string(i) + "]";
    if (st[i].is_string()) {
      s.labels.push_back(st[i].get<std::string>());
    } else if (st[i].is_number_integer()) {
      s.labels.push_back(std::to_string(st[i].get<long>()));
    } else {
      throw ParseError(w, "state labels must be strings or integers");
    }
  }
  if (doc.contains("overflow")) s.overflow = lookup(s, text(doc["overflow"], where + ".overflow"), where + ".overflow");
  if (doc.contains("cemetery")) s.cemetery = lookup(s, text(doc["cemetery"], where + ".cemetery"), where + ".cemetery");
  try {
    s.validate();
  } catch (const Error& e) {
    throw ParseError(where + ".states", e.what());
  }
  return s;
}

TimeWindow parse_window(const json& doc, const std::string& where) {
  TimeWindow w;
  if (!doc.contains("window")) return w;
  const json& j = doc["window"];
  if (j.contains("t0")) w.t0 = number(j["t0"], where + ".window.t0");
  if (j.contains("t1") && !j["t1"].is_null()) w.t1 = number(j["t1"], where + ".window.t1");
  if (!(w.t0 < w.t1)) throw ParseError(where + ".window", "requires t0 < t1");
  return w;
}

Matrix parse_rate_map(const json& j, const StateSpace& s, const std::string& where) {
  const Index n = s.size();
  Matrix q = Matrix::Zero(n, n);
  if (!j.is_object()) throw ParseError(where, "expected {state: {state: rate}}");
  for (const auto& [from, row] : j.items()) {
    const Index x = lookup(s, from, where + "." + from);
    if (!row.is_object()) throw ParseError(where + "." + from, "expected {state: rate}");
    for (const auto& [to, r] : row.items()) {
      const auto w = where + "." + from + "." + to;
      const Index y = lookup(s, to, w);
      if (y == x) throw ParseError(w, "self rates are implied by the row");
      const Real v = number(r, w);
      if (!(v >= 0.0) || !std::isfinite(v)) throw ParseError(w, "rate must be finite and >= 0");
      q(x, y) = v;
    }
  }
  for (Index x = 0; x < n; ++x) q(x, x) = -(q.row(x).sum() - q(x, x));
  return q;
}

Matrix parse_matrix(const json& j, Index n, const std::string& where) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n)
    throw ParseError(where, "expected a " + std::to_string(n) + "x" + std::to_string(n) + " array");
  Matrix q(n, n);
  for (Index x = 0; x < n; ++x) {
    const auto& row = j[static_cast<std::size_t>(x)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n)
      throw ParseError(where + "[" + std::to_string(x) + "]", "row has wrong length");
    for (Index y = 0; y < n; ++y)
      q(x, y) = number(row[static_cast<std::size_t>(y)],
                       where + "[" + std::to_string(x) + "][" + std::to_string(y) + "]");
  }
  return q;
}

Matrix parse_piece(const json& j, const StateSpace& s, bool deficient, const std::string& where) {
  if (j.contains("matrix")) return parse_matrix(j["matrix"], s.size(), where + ".matrix");
  Matrix q = parse_rate_map(need(j, "rates", where), s, where + ".rates");
  if (deficient && j.contains("deficiency")) {
    for (const auto& [from, d] : j["deficiency"].items()) {
      const Index x = lookup(s, from, where + ".deficiency." + from);
      q(x, x) -= number(d, where + ".deficiency." + from);
    }
  }
  return q;
}

}  // namespace

RateKernel parse_kernel(const json& doc) {
  const std::string where = "model";
  if (!doc.is_object()) throw ParseError(where, "expected an object");
  const TimeWindow window = parse_window(doc, where);
  const json& k = need(doc, "kernel", where);
  const std::string type = text(need(k, "type", where + ".kernel"), where + ".kernel.type");
  std::optional<RateKernel> kernel;
  try {
    if (type == "generator") {
      const std::string name = text(need(k, "name", where + ".kernel"), where + ".kernel.name");
      std::map<std::string, Real> params;
      if (k.contains("params"))
        for (const auto& [key, v] : k["params"].items())
          params[key] = number(v, where + ".kernel.params." + key);
      kernel.emplace(make_generator(name, params, window));
    } else {
      StateSpace s = parse_states(doc, where);
      const bool deficient = doc.value("deficient", false);
      std::vector<Real> breaks;
      std::vector<Matrix> mats;
      if (type == "constant") {
        breaks.push_back(window.t0);
        mats.push_back(parse_piece(k, s, deficient, where + ".kernel"));
      } else if (type == "piecewise") {
        const json& pieces = need(k, "pieces", where + ".kernel");
        if (!pieces.is_array() || pieces.empty())
          throw ParseError(where + ".kernel.pieces", "expected a non-empty array");
        for (std::size_t i = 0; i < pieces.size(); ++i) {
          const auto w = where + ".kernel.pieces[" + std::to_string(i) + "]";
          breaks.push_back(number(need(pieces[i], "start", w), w + ".start"));
          mats.push_back(parse_piece(pieces[i], s, deficient, w));
        }
      } else {
        throw ParseError(where + ".kernel.type", "unknown kernel type '" + type + "'");
      }
      if (deficient) {
        kernel.emplace(make_conservative(s, window, breaks, mats));
      } else {
        kernel.emplace(RateKernel::piecewise(s, window, breaks, mats));
      }
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(where + ".kernel", e.what());
  }
  if (doc.contains("overflow_rate_sup"))
    kernel->set_overflow_rate_sup(number(doc["overflow_rate_sup"], where + ".overflow_rate_sup"));
  return std::move(*kernel);
}

RateKernel load_kernel(const std::string& path) { return parse_kernel(read_json(path)); }

RowVector parse_distribution(const json& j, const StateSpace& space,
                             const std::string& where) {
  RowVector g = RowVector::Zero(space.size());
  if (!j.is_object()) throw ParseError(where, "expected {state: probability}");
  for (const auto& [label, p] : j.items()) g(lookup(space, label, where + "." + label)) = number(p, where + "." + label);
  if ((g.array() < 0.0).any() || std::abs(g.sum() - 1.0) > 1e-12)
    throw ParseError(where, "not a probability vector");
  return g;
}

namespace {

std::pair<std::string, std::string> split_pair(const std::string& key, const std::string& where) {
  const auto c = key.find(',');
  if (c == std::string::npos) throw ParseError(where, "key must be \"first,second\"");
  return {key.substr(0, c), key.substr(c + 1)};
}

Index action_of(const MdpModel& m, const std::string& label, const std::string& where) {
  for (Index a = 0; a < m.n_actions(); ++a)
    if (m.actions[a] == label) return a;
  throw ParseError(where, "unknown action '" + label + "'");
}

Matrix parse_state_action(const json& j, const MdpModel& m, const std::string& where) {
  if (j.is_number()) return Matrix::Constant(m.size(), m.n_actions(), number(j, where));
  Matrix c = Matrix::Zero(m.size(), m.n_actions());
  if (!j.is_object()) throw ParseError(where, "expected a number or {\"x,a\": value}");
  for (const auto& [key, v] : j.items()) {
    const auto w = where + "." + key;
    const auto [xs, as] = split_pair(key, w);
    c(lookup(m.space, xs, w), action_of(m, as, w)) = number(v, w);
  }
  return c;
}

CostModel parse_costs(const json& j, const MdpModel& m, const std::string& where) {
  CostModel c;
  c.running = j.contains("running") ? parse_state_action(j["running"], m, where + ".running")
                                    : Matrix::Zero(m.size(), m.n_actions());
  if (j.contains("alpha")) {
    const json& a = j["alpha"];
    if (a.is_number()) {
      c.alpha = DiscountRate::constant(a.get<Real>());
    } else {
      c.alpha.breaks = need(a, "breaks", where + ".alpha").get<std::vector<Real>>();
      c.alpha.values = need(a, "values", where + ".alpha").get<std::vector<Real>>();
    }
  }
  if (j.contains("instant")) {
    for (std::size_t i = 0; i < j["instant"].size(); ++i) {
      const auto w = where + ".instant[" + std::to_string(i) + "]";
      const json& e = j["instant"][i];
      c.instant.push_back({number(need(e, "u", w), w + ".u"), parse_state_action(need(e, "G", w), m, w + ".G")});
    }
  }
  if (j.contains("jump")) {
    const json& jc = j["jump"];
    if (jc.is_number()) {
      Matrix C = Matrix::Constant(m.size(), m.size(), jc.get<Real>());
      C.diagonal().setZero();
      c.jump = C;
    } else {
      Matrix C = Matrix::Zero(m.size(), m.size());
      for (const auto& [key, v] : jc.items()) {
        const auto w = where + ".jump." + key;
        const auto [xs, ys] = split_pair(key, w);
        C(lookup(m.space, xs, w), lookup(m.space, ys, w)) = number(v, w);
      }
      c.jump = C;
    }
  }
  try {
    c.validate(m);
  } catch (const Error& e) {
    throw ParseError(where, e.what());
  }
  return c;
}

}  // namespace

MdpFile parse_mdp(const json& doc) {
  const std::string where = "mdp";
  if (!doc.is_object()) throw ParseError(where, "expected an object");
  MdpFile f;
  if (doc.contains("generator")) {
    const std::string g = text(doc["generator"], where + ".generator");
    if (g == "bench3") {
      f.model = bench3();
      f.initial = bench3_gamma();
    } else if (g == "controlled-birth") {
      const int N = static_cast<int>(doc.value("N", 40));
      f.model = controlled_birth(N);
      f.initial = controlled_birth_gamma(N);
    } else {
      throw ParseError(where + ".generator", "unknown MDP generator '" + g + "'");
    }
  } else {
    MdpModel& m = f.model;
    m.space = parse_states(doc, where);
    const json& acts = need(doc, "actions", where);
    for (std::size_t i = 0; i < acts.size(); ++i) m.actions.push_back(text(acts[i], where + ".actions"));
    const auto n = static_cast<std::size_t>(m.space.size());
    m.available.resize(n);
    m.default_action.assign(n, -1);
    m.rates.assign(n, std::vector<RowVector>(m.actions.size()));
    const json& av = need(doc, "available", where);
    for (const auto& [label, list] : av.items()) {
      const auto w = where + ".available." + label;
      const Index x = lookup(m.space, label, w);
      for (const auto& a : list) m.available[static_cast<std::size_t>(x)].push_back(action_of(m, text(a, w), w));
    }
    for (std::size_t x = 0; x < n; ++x) {
      if (m.available[x].empty()) throw ParseError(where + ".available." + m.space.labels[x], "A(x) is empty");
      m.default_action[x] = m.available[x].front();
      for (Index a : m.available[x]) m.rates[x][static_cast<std::size_t>(a)] = RowVector::Zero(m.space.size());
    }
    if (doc.contains("default_action"))
      for (const auto& [label, a] : doc["default_action"].items()) {
        const auto w = where + ".default_action." + label;
        m.default_action[static_cast<std::size_t>(lookup(m.space, label, w))] = action_of(m, text(a, w), w);
      }
    for (const auto& [key, row] : need(doc, "rates", where).items()) {
      const auto w = where + ".rates." + key;
      const auto [xs, as] = split_pair(key, w);
      const Index x = lookup(m.space, xs, w);
      const Index a = action_of(m, as, w);
      auto& r = m.rates[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)];
      if (r.size() == 0) throw ParseError(w, "action not available in this state");
      for (const auto& [to, v] : row.items()) {
        const Index y = lookup(m.space, to, w + "." + to);
        if (y == x) throw ParseError(w + "." + to, "self rates are implied by the row");
        r(y) = number(v, w + "." + to);
      }
    }
    if (doc.contains("overflow_rate_sup"))
      m.overflow_rate_sup = number(doc["overflow_rate_sup"], where + ".overflow_rate_sup");
    try {
      m.finalize();
    } catch (const Error& e) {
      throw ParseError(where, e.what());
    }
  }
  if (doc.contains("costs")) f.cost = parse_costs(doc["costs"], f.model, where + ".costs");
  if (doc.contains("initial")) f.initial = parse_distribution(doc["initial"], f.model.space, where + ".initial");
  return f;
}

MdpFile load_mdp(const std::string& path) { return parse_mdp(read_json(path)); }

}  // namespace mjp
