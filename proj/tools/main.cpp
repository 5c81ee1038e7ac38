#include "mjp/acceptance.hpp"
#include "mjp/cost.hpp"
#include "mjp/defaults.hpp"
#include "mjp/kolmogorov.hpp"
#include "mjp/manifest.hpp"
#include "mjp/marginals.hpp"
#include "mjp/model_io.hpp"
#include "mjp/transition.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mjp;

namespace {

struct Options {
  std::string model;
  std::string out;
  std::uint64_t seed = defaults::seed;
  std::size_t paths = defaults::paths;
  Real grid_step = defaults::grid_step;
  Real tol = defaults::term_tol;
  std::size_t max_jumps = defaults::max_jumps;
  Real horizon = defaults::horizon;
  Real delta = defaults::delta;
  int truncation = 0;  // 0: as in the model file
  int max_terms = defaults::max_terms;
};

std::string num(Real v) { return format_real(v); }

class Output {
 public:
  Output(std::string command, const std::vector<std::string>& argv, const Options& o)
      : dir_(o.out.empty() ? (fs::path(output_dir("mjp-out")) / command).string() : o.out) {
    fs::create_directories(dir_);
    manifest_.command = std::move(command);
    manifest_.argv = argv;
    if (!o.model.empty()) {
      manifest_.model_path = fs::absolute(o.model).string();
      manifest_.model_digest = sha256_hex(read_file(o.model));
    }
  }
  RunManifest& manifest() { return manifest_; }
  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }
  std::ofstream file(const std::string& name) {
    std::ofstream f(path(name));
    if (!f) throw ConfigurationError("cannot write '" + path(name) + "'");
    f.precision(17);
    return f;
  }
  void json_file(const std::string& name, const json& j) { file(name) << j.dump(2) << "\n"; }
  void finish() { manifest_.write(path("manifest.json")); }
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  RunManifest manifest_;
};

RateKernel load_model_kernel(const Options& o) {
  if (o.model.empty()) throw CLI::ValidationError("--model", "a model file is required");
  json doc = read_json(o.model);
  if (o.truncation > 0) {
    if (!doc.contains("kernel") || doc["kernel"].value("type", "") != "generator")
      throw CLI::ValidationError("--truncation", "only generator models have a truncation level");
    auto& params = doc["kernel"]["params"];
    const std::string name = doc["kernel"].value("name", "");
    params[name == "pure-birth" ? "N" : "J"] = o.truncation;
  }
  return parse_kernel(doc);
}

MdpFile load_model_mdp(const Options& o) {
  if (o.model.empty()) throw CLI::ValidationError("--model", "a model file is required");
  json doc = read_json(o.model);
  if (o.truncation > 0) doc["N"] = o.truncation;
  return parse_mdp(doc);
}

void echo_options(RunManifest& m, const Options& o) {
  m.set("seed", std::to_string(o.seed));
  m.set("paths", std::to_string(o.paths));
  m.set("grid_step", o.grid_step);
  m.set("tol", o.tol);
  m.set("max_jumps", std::to_string(o.max_jumps));
  m.set("horizon", o.horizon);
  m.set("delta", o.delta);
  m.set("truncation", std::to_string(o.truncation));
  m.set("max_terms", std::to_string(o.max_terms));
}

json options_json(const RunManifest& m) { return m.params; }

Index state_of(const StateSpace& s, const std::string& label) {
  try {
    return s.index_of(label);
  } catch (const Error&) {
    throw CLI::ValidationError("state", "unknown state '" + label + "'");
  }
}

std::vector<Real> parse_list(const std::string& s) {
  std::vector<Real> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<Real> default_times(Real horizon) {
  std::vector<Real> t;
  for (int k = 1; k <= 10; ++k) t.push_back(horizon * k / 10.0);
  return t;
}

SimConfig sim_config(const Options& o, Real horizon) {
  SimConfig c;
  c.seed = o.seed;
  c.replications = o.paths;
  c.horizon = horizon;
  c.max_jumps = o.max_jumps;
  c.validate();
  return c;
}

void write_marginals(std::ofstream& f, const MarginalTable& t, const StateSpace& space,
                     const std::vector<std::string>& actions) {
  f << "t,state,action,mass,se\n";
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    const auto K = static_cast<Index>(k);
    for (Index x = 0; x < space.size(); ++x) {
      f << num(t.times[k]) << "," << space.labels[x] << ",," << num(t.state(K, x)) << ","
        << num(t.state_se(K, x)) << "\n";
      for (std::size_t a = 0; a < actions.size(); ++a)
        f << num(t.times[k]) << "," << space.labels[x] << "," << actions[a] << ","
          << num(t.state_action[k](x, static_cast<Index>(a))) << ","
          << num(t.state_action_se[k](x, static_cast<Index>(a))) << "\n";
    }
  }
}

void write_policy(std::ofstream& f, const MarkovPolicy& p, const MdpModel& m) {
  f << "bin,t_start,t_end,t_rep,state,action,probability\n";
  const auto& b = p.bins();
  for (std::size_t k = 0; k < b.size(); ++k)
    for (Index x = 0; x < m.size(); ++x)
      for (Index a = 0; a < m.n_actions(); ++a) {
        if (!m.is_available(x, a)) continue;
        f << k << "," << num(b.edges[k]) << "," << (k + 1 < b.size() ? num(b.edges[k + 1]) : "inf") << ","
          << num(b.reps[k]) << "," << m.space.labels[x] << "," << m.actions[a] << ","
          << num(p.tables()[k](x, a)) << "\n";
      }
}

// ---------------------------------------------------------------- transition

int cmd_transition(const Options& o, const std::vector<std::string>& argv, const std::string& from,
                   Real u, Real t, const std::vector<std::string>& monitor, bool oracle) {
  const RateKernel k = load_model_kernel(o);
  Output out("transition", argv, o);
  echo_options(out.manifest(), o);
  out.manifest().set("u", u);
  out.manifest().set("t", t);
  if (!(t >= u)) throw CLI::ValidationError("--t", "needs t >= u");
  const Index x = state_of(k.space(), from);
  TransitionOptions opts;
  opts.tol = o.tol;
  opts.max_terms = o.max_terms;
  for (const auto& l : monitor) opts.monitored.push_back(state_of(k.space(), l));
  const TimeGrid grid = TimeGrid::for_kernel(k, u, t, o.grid_step);
  bool converged = true;
  Real tail = 0.0;
  std::optional<TransitionTable> table;
  try {
    table.emplace(oracle ? ode_oracle(k, u, x, grid) : minimal_transition(k, u, x, grid, opts));
  } catch (const ConvergenceError& e) {
    converged = false;
    tail = e.tail();
    table.emplace(e.partial());
  }
  const auto& rows = table->from(x);
  auto f = out.file("transition.csv");
  f << "u,x,t,y,probability\n";
  const auto last = static_cast<Index>(grid.size() - 1);
  for (Index y = 0; y < k.size(); ++y)
    f << num(u) << "," << from << "," << num(t) << "," << k.space().labels[y] << "," << num(rows.values(last, y)) << "\n";
  auto c = out.file("mass_defect.csv");
  c << "t,mass_defect,term_tail\n";
  for (std::size_t n = 0; n < grid.size(); ++n)
    c << num(grid[n]) << "," << num(rows.mass_defect(static_cast<Index>(n))) << ","
      << num(rows.term_tail.size() ? rows.term_tail(static_cast<Index>(n)) : 0.0) << "\n";
  out.json_file("report.json", {{"method", oracle ? "ode_oracle" : "feller_terms"},
                                {"terms", rows.n_terms},
                                {"converged", converged},
                                {"tail", tail},
                                {"mass_defect", rows.mass_defect(last)},
                                {"options", options_json(out.manifest())}});
  out.finish();
  std::printf("P(%s, %s; %s, .) written to %s%s\n", num(u).c_str(), from.c_str(), num(t).c_str(),
              out.path("transition.csv").c_str(), converged ? "" : " (term sum did not converge)");
  return converged ? 0 : 1;
}

// ---------------------------------------------------------------- check

int cmd_check(const Options& o, const std::vector<std::string>& argv, const std::string& from,
              Real t, const std::vector<std::string>& set_labels, const std::string& which) {
  const RateKernel k = load_model_kernel(o);
  Output out("check", argv, o);
  echo_options(out.manifest(), o);
  out.manifest().set("t", t);
  const Index x = state_of(k.space(), from);
  std::vector<Index> set;
  for (const auto& l : set_labels) set.push_back(state_of(k.space(), l));
  if (set.empty()) set = {x};
  const Real u = k.window().t0;
  TransitionOptions opts;
  opts.tol = o.tol;
  opts.max_terms = o.max_terms;
  opts.monitored = set;
  const TimeGrid grid = TimeGrid::for_kernel(k, u, t, o.grid_step);
  const TransitionTable table = minimal_transition(k, u, x, grid, opts);
  json rep = json::object();
  bool ok = true;
  const std::vector<Index> xs{x};
  auto add = [&](const ResidualReport& r) {
    rep[to_string(r.equation)] = {{"max", r.max()}, {"mean", r.mean()}, {"tolerance", r.tolerance}, {"passed", r.passed()}};
    ok = ok && r.passed();
  };
  if (which == "backward" || which == "all") {
    const BackwardSlices sl = backward_slices(k, u, t, o.grid_step, set, opts);
    add(backward_residual(k, sl, xs, defaults::residual_tol));
    add(backward_integral_check(k, sl, xs, 5, defaults::integral_tol));
  }
  if (which == "forward" || which == "all") {
    try {
      add(forward_residual(k, table, x, set, t, defaults::residual_tol));
      add(forward_integral_check(k, table, x, set, t, defaults::integral_tol));
    } catch (const GuardError& e) {
      rep["forward_guard"] = e.what();
      ok = false;
    }
  }
  rep["options"] = options_json(out.manifest());
  rep["passed"] = ok;
  out.json_file("report.json", rep);
  out.finish();
  std::cout << rep.dump(2) << "\n";
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Options& o, const std::vector<std::string>& argv, const std::string& from) {
  const RateKernel k = load_model_kernel(o);
  Output out("simulate", argv, o);
  echo_options(out.manifest(), o);
  const Index x = from.empty() ? 0 : state_of(k.space(), from);
  SimConfig cfg = sim_config(o, o.horizon);
  struct Paths {
    std::vector<PathRecord> v;
    void merge(Paths& p) {
      for (auto& r : p.v) v.push_back(std::move(r));
    }
  };
  const Paths all = run_chunks<Paths>(cfg.replications, [&](std::size_t c, std::size_t b, std::size_t e) {
    Paths p;
    Rng rng(cfg.seed, c);
    for (std::size_t r = b; r < e; ++r) p.v.push_back(sample_path(k, x, cfg, rng));
    return p;
  });
  auto f = out.file("paths.csv");
  f << "path,t,state,status\n";
  for (std::size_t i = 0; i < all.v.size(); ++i) {
    const auto& p = all.v[i];
    const std::string st = to_string(p.status);
    f << i << "," << num(p.t0) << "," << k.space().labels[p.x0] << "," << st << "\n";
    for (const auto& j : p.jumps) f << i << "," << num(j.t) << "," << k.space().labels[j.x] << "," << st << "\n";
  }
  const PathSummary s = summarize(all.v);
  json rep = {{"paths", s.paths}, {"censored", s.censored}, {"absorbed", s.absorbed},
              {"exploded", s.exploded}, {"mean_jumps", s.mean_jumps},
              {"options", options_json(out.manifest())}};
  out.json_file("report.json", rep);
  out.finish();
  std::printf("%zu paths: %zu censored, %zu absorbed, %zu exploded; written to %s\n", s.paths, s.censored,
              s.absorbed, s.exploded, out.path("paths.csv").c_str());
  return 0;
}

// ---------------------------------------------------------------- mdp

struct MdpArgs {
  std::string policy = "parity";
  std::string times;
  std::string criterion = "finite_horizon";
  std::string route = "mc";
  std::size_t batches = 10;
};

RowVector initial_law(const MdpFile& f) {
  if (f.initial) return *f.initial;
  RowVector g = RowVector::Zero(f.model.size());
  g(0) = 1.0;
  return g;
}

int cmd_mdp_simulate(const Options& o, const std::vector<std::string>& argv, const MdpArgs& a) {
  const MdpFile mf = load_model_mdp(o);
  Output out("mdp-simulate", argv, o);
  echo_options(out.manifest(), o);
  out.manifest().set("policy", a.policy);
  const auto policy = make_policy(a.policy, mf.model);
  const auto times = a.times.empty() ? default_times(o.horizon) : parse_list(a.times);
  const MarginalTable t = simulate_marginals(mf.model, *policy, initial_law(mf), times, sim_config(o, times.back()));
  auto f = out.file("marginals.csv");
  write_marginals(f, t, mf.model.space, mf.model.actions);
  json totals = json::array();
  for (std::size_t k = 0; k < times.size(); ++k) totals.push_back({{"t", times[k]}, {"mass", t.total(k)}});
  out.json_file("report.json", {{"policy", a.policy}, {"totals", totals}, {"options", options_json(out.manifest())}});
  out.finish();
  std::printf("marginals of %s written to %s\n", a.policy.c_str(), out.path("marginals.csv").c_str());
  return 0;
}

int cmd_mdp_derive(const Options& o, const std::vector<std::string>& argv, const MdpArgs& a) {
  const MdpFile mf = load_model_mdp(o);
  Output out("mdp-derive-markov", argv, o);
  echo_options(out.manifest(), o);
  out.manifest().set("policy", a.policy);
  const auto policy = make_policy(a.policy, mf.model);
  const BinLayout bins = BinLayout::centered(o.delta, o.horizon);
  const MarginalTable t = simulate_marginals(mf.model, *policy, initial_law(mf), bins.reps, sim_config(o, bins.reps.back()));
  const DerivedPolicy d = derive_markov_policy(t, mf.model, bins);
  auto f = out.file("policy.csv");
  write_policy(f, d.policy, mf.model);
  out.json_file("report.json", {{"policy", a.policy},
                                {"bins", bins.size()},
                                {"fallback_bins", d.fallback_bins},
                                {"renormalized_bins", d.renormalized_bins},
                                {"log", d.log},
                                {"options", options_json(out.manifest())}});
  out.finish();
  std::printf("derived Markov policy (%zu bins) written to %s\n", bins.size(), out.path("policy.csv").c_str());
  return 0;
}

int cmd_mdp_compare(const Options& o, const std::vector<std::string>& argv, const MdpArgs& a) {
  const MdpFile mf = load_model_mdp(o);
  const MdpModel& m = mf.model;
  Output out("mdp-compare", argv, o);
  echo_options(out.manifest(), o);
  out.manifest().set("policy", a.policy);
  out.manifest().set("batches", std::to_string(a.batches));
  const auto policy = make_policy(a.policy, m);
  const RowVector g = initial_law(mf);
  const auto times = a.times.empty() ? default_times(o.horizon) : parse_list(a.times);
  const BinLayout bins = BinLayout::centered(o.delta, times.back());
  TransitionOptions topts;
  topts.tol = o.tol;
  topts.max_terms = o.max_terms;
  const MarginalTable pi = simulate_marginals(m, *policy, g, times, sim_config(o, times.back()));
  SimConfig dc = sim_config(o, times.back());
  dc.seed = o.seed + 1000;
  const DerivedWithErrors d = derive_with_errors(m, *policy, g, bins, times, dc, a.batches, o.grid_step, topts);
  const DominanceReport r = verify_dominance(pi, d.exact, m.space);
  bool full = r.full_mass_times.size() == times.size();
  const bool ok = r.dominance_holds() && (!full || r.equality_holds());
  auto f = out.file("comparison.csv");
  f << "t,state,action,pi,phi,se,dominated,equality_checked,equal\n";
  for (const auto& e : r.entries)
    f << num(e.t) << "," << m.space.labels[e.x] << "," << (e.a < 0 ? "" : m.actions[e.a]) << "," << num(e.pi)
      << "," << num(e.phi) << "," << num(e.se) << "," << e.dominated << "," << e.equality_checked << ","
      << e.equal << "\n";
  auto pf = out.file("derived_policy.csv");
  write_policy(pf, d.derived.policy, m);
  const std::string verdict = !r.dominance_holds() ? "dominance_violated"
                              : full ? (r.equality_holds() ? "equality" : "equality_violated")
                                     : "dominance";
  const json rep = {{"policy", a.policy},
                    {"verdict", verdict},
                    {"passed", ok},
                    {"entries", r.entries.size()},
                    {"dominance_violations", r.dominance_violations},
                    {"equality_violations", r.equality_violations},
                    {"full_mass_times", r.full_mass_times},
                    {"max_z", r.max_z},
                    {"options", options_json(out.manifest())}};
  out.json_file("verdict.json", rep);
  out.finish();
  std::cout << rep.dump(2) << "\n";
  return ok ? 0 : 1;
}

int cmd_mdp_cost(const Options& o, const std::vector<std::string>& argv, const MdpArgs& a) {
  const MdpFile mf = load_model_mdp(o);
  const MdpModel& m = mf.model;
  if (!mf.cost) throw CLI::ValidationError("--model", "the model file has no \"costs\" section");
  Output out("mdp-cost", argv, o);
  echo_options(out.manifest(), o);
  out.manifest().set("policy", a.policy);
  out.manifest().set("criterion", a.criterion);
  out.manifest().set("route", a.route);
  const Criterion c = parse_criterion(a.criterion);
  const auto policy = make_policy(a.policy, m);
  CostValue v;
  if (a.route == "mc") {
    v = evaluate_cost_mc(m, *policy, initial_law(mf), *mf.cost, c, o.horizon, sim_config(o, o.horizon));
  } else if (a.route == "exact") {
    const auto* mp = dynamic_cast<const MarkovPolicy*>(policy.get());
    if (!mp) throw CLI::ValidationError("--route", "the exact route needs a Markov policy");
    TransitionOptions topts;
    topts.tol = o.tol;
    topts.max_terms = o.max_terms;
    v = evaluate_cost_exact(m, *mp, initial_law(mf), *mf.cost, c, o.horizon, o.grid_step, topts);
  } else {
    throw CLI::ValidationError("--route", "expected mc or exact");
  }
  const json rep = {{"policy", a.policy}, {"criterion", a.criterion}, {"route", v.route},
                    {"value", v.value},   {"std_error", v.std_error}, {"tail_bound", v.tail_bound},
                    {"horizon", v.horizon}, {"paths", v.paths}, {"options", options_json(out.manifest())}};
  out.json_file("cost.json", rep);
  out.finish();
  std::cout << rep.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------- accept / replay

int cmd_accept(const Options& o, const std::vector<int>& only) {
  const std::string dir = o.out.empty() ? (fs::path(output_dir("mjp-out")) / "accept").string() : o.out;
  const AcceptanceRun run = run_acceptance(dir, o.seed, std::cout, only);
  std::size_t passed = 0;
  for (const auto& c : run.outcomes) passed += c.passed;
  std::printf("%zu of %zu criteria passed; reports in %s\n", passed, run.outcomes.size(), dir.c_str());
  return run.all_passed() ? 0 : 1;
}

int run(std::vector<std::string> args);

bool same_file(const fs::path& a, const fs::path& b) {
  return read_file(a.string()) == read_file(b.string());
}

int cmd_replay(const std::string& manifest_path, const std::string& out_dir) {
  const RunManifest m = RunManifest::read(manifest_path);
  m.check_model();
  const fs::path original = fs::path(manifest_path).parent_path();
  if (m.command == "accept") {
    const std::string id = m.params.at("criterion");
    const json stored = read_json((original.parent_path() / ("criterion-" + id + ".json")).string());
    const bool ok = replay_matches(m, stored.at("fingerprint"));
    std::printf("criterion %s replay: %s\n", id.c_str(), ok ? "identical" : "DIFFERENT");
    return ok ? 0 : 1;
  }
  const std::string target = out_dir.empty() ? (original / "replay").string() : out_dir;
  std::vector<std::string> args(m.argv.begin() + 1, m.argv.end());
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--out") args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
  if (!m.model_path.empty())
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
      if (args[i] == "--model") args[i + 1] = m.model_path;
  args.push_back("--out");
  args.push_back(target);
  args.insert(args.begin(), m.argv.front());
  const int code = run(args);
  bool same = true;
  for (const auto& e : fs::directory_iterator(original)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    const fs::path other = fs::path(target) / e.path().filename();
    const bool eq = fs::exists(other) && same_file(e.path(), other);
    std::printf("%-24s %s\n", e.path().filename().c_str(), eq ? "identical" : "DIFFERENT");
    same = same && eq;
  }
  return same && code == 0 ? 0 : 1;
}

void add_common(CLI::App* c, Options& o, bool model = true) {
  if (model) c->add_option("--model", o.model, "model file (JSON)")->check(CLI::ExistingFile);
  c->add_option("--out", o.out, "output directory (default $MJP_OUT_DIR/<command> or mjp-out/<command>)");
  c->add_option("--seed", o.seed, "base seed")->capture_default_str();
  c->add_option("--paths", o.paths, "Monte Carlo replications")->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--grid-step", o.grid_step, "time grid step")->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--tol", o.tol, "term-sum tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--max-terms", o.max_terms, "term-sum cap")->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--max-jumps", o.max_jumps, "jumps before a path counts as exploded")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c->add_option("--horizon", o.horizon, "simulation horizon / cost horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c->add_option("--delta", o.delta, "Markov policy bin width")->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--truncation", o.truncation, "truncation level of generator models (J or N)")
      ->check(CLI::NonNegativeNumber);
}

int run(std::vector<std::string> args) {
  CLI::App app{"Minimal transition functions, Kolmogorov checks and controlled jump processes"};
  app.require_subcommand(1);
  Options o;
  std::string from, which = "all", manifest, replay_out;
  Real u = 0.0, t = 1.0;
  bool oracle = false;
  std::vector<std::string> monitor, set;
  std::vector<int> only;
  MdpArgs ma;

  auto* tr = app.add_subcommand("transition", "minimal transition function P(u,x;t,.)");
  add_common(tr, o);
  tr->add_option("--from", from, "start state label")->required();
  tr->add_option("--u", u, "start time")->capture_default_str();
  tr->add_option("--t", t, "end time")->capture_default_str();
  tr->add_option("--monitor", monitor, "states whose convergence decides the stopping rule");
  tr->add_flag("--oracle", oracle, "use the matrix exponential / RK4 oracle");

  auto* ck = app.add_subcommand("check", "Kolmogorov equation residuals");
  add_common(ck, o);
  ck->add_option("--from", from, "start state label")->required();
  ck->add_option("--t", t, "end time")->capture_default_str();
  ck->add_option("--set", set, "state set B (labels)");
  ck->add_option("--equation", which, "backward, forward or all")
      ->check(CLI::IsMember({"backward", "forward", "all"}))
      ->capture_default_str();

  auto* sm = app.add_subcommand("simulate", "sample paths of a rate kernel");
  add_common(sm, o);
  sm->add_option("--from", from, "start state label (default: first state)");

  auto* mdp = app.add_subcommand("mdp", "controlled jump processes");
  mdp->require_subcommand(1);
  auto policy_opt = [&](CLI::App* c) {
    c->add_option("--policy", ma.policy, "parity, birth, uniform, default or switch")->capture_default_str();
  };
  auto* ms = mdp->add_subcommand("simulate", "marginals of a policy by simulation");
  add_common(ms, o);
  policy_opt(ms);
  ms->add_option("--times", ma.times, "comma-separated times (default: horizon/10 steps)");
  auto* md = mdp->add_subcommand("derive-markov", "Markov policy with the same marginals");
  add_common(md, o);
  policy_opt(md);
  auto* mc = mdp->add_subcommand("compare", "dominance / equality of derived marginals");
  add_common(mc, o);
  policy_opt(mc);
  mc->add_option("--times", ma.times, "comma-separated times");
  mc->add_option("--batches", ma.batches, "batches for the derived-policy standard errors")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  auto* mcost = mdp->add_subcommand("cost", "expected discounted cost");
  add_common(mcost, o);
  policy_opt(mcost);
  mcost->add_option("--criterion", ma.criterion, "infinite_discounted, finite_horizon or infinite_with_jump_costs")
      ->capture_default_str();
  mcost->add_option("--route", ma.route, "mc or exact")->capture_default_str();

  auto* ac = app.add_subcommand("accept", "acceptance suite");
  add_common(ac, o, false);
  ac->add_option("--criterion", only, "run only these criteria");

  auto* rp = app.add_subcommand("replay", "rerun a manifest and compare outputs");
  rp->add_option("manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);
  rp->add_option("--out", replay_out, "output directory for the rerun");

  const std::vector<std::string> argv = args;
  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    if (*tr) return cmd_transition(o, argv, from, u, t, monitor, oracle);
    if (*ck) return cmd_check(o, argv, from, t, set, which);
    if (*sm) return cmd_simulate(o, argv, from);
    if (*ms) return cmd_mdp_simulate(o, argv, ma);
    if (*md) return cmd_mdp_derive(o, argv, ma);
    if (*mc) return cmd_mdp_compare(o, argv, ma);
    if (*mcost) return cmd_mdp_cost(o, argv, ma);
    if (*ac) return cmd_accept(o, only);
    if (*rp) return cmd_replay(manifest, replay_out);
  } catch (const CLI::Error& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigurationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }
