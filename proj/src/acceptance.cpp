#include "mjp/acceptance.hpp"

#include "mjp/cost.hpp"
#include "mjp/defaults.hpp"
#include "mjp/expansion.hpp"
#include "mjp/generators.hpp"
#include "mjp/kolmogorov.hpp"
#include "mjp/marginals.hpp"
#include "mjp/transition.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

namespace mjp {

using nlohmann::json;

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

const std::string& param(const Params& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw ConfigurationError("missing acceptance parameter '" + key + "'");
  return it->second;
}
Real preal(const Params& p, const std::string& key) { return std::stod(param(p, key)); }
std::size_t psize(const Params& p, const std::string& key) { return std::stoull(param(p, key)); }
std::uint64_t pseed(const Params& p) { return std::stoull(param(p, "seed")); }

void put(json& fp, const std::string& key, Real v) { fp[key] = format_real(v); }

void put(json& fp, const std::string& key, const Matrix& m) {
  json a = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) a.push_back(format_real(m(i, j)));
  fp[key] = a;
}

void put(json& fp, const std::string& key, const MarginalTable& t) {
  put(fp, key + ".state", t.state);
  put(fp, key + ".state_se", t.state_se);
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    put(fp, key + ".sa" + std::to_string(k), t.state_action[k]);
    put(fp, key + ".sa_se" + std::to_string(k), t.state_action_se[k]);
  }
}

SimConfig sim_config(std::uint64_t seed, std::size_t paths, Real horizon, std::size_t max_jumps) {
  SimConfig c;
  c.seed = seed;
  c.replications = paths;
  c.horizon = horizon;
  c.max_jumps = max_jumps;
  return c;
}

std::vector<Index> oscillator_targets(const RateKernel& k, int jmax) {
  std::vector<Index> out{k.space().index_of("0")};
  for (int j = 1; j <= jmax; ++j) {
    out.push_back(k.space().index_of(std::to_string(j)));
    out.push_back(k.space().index_of(std::to_string(-j)));
  }
  return out;
}

std::vector<Index> all_states(const RateKernel& k) {
  std::vector<Index> out;
  for (Index x = 0; x < k.size(); ++x) out.push_back(x);
  return out;
}

RateKernel random_kernel(std::uint64_t seed, int n) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<Real> rate(0.0, 1.0);
  std::bernoulli_distribution zero(0.3);
  Matrix q = Matrix::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y)
      if (y != x && !zero(eng)) q(x, y) = rate(eng);
    q(x, x) = -q.row(x).sum();
  }
  StateSpace s;
  for (int x = 0; x < n; ++x) s.labels.push_back(std::to_string(x));
  return RateKernel::constant(s, TimeWindow{}, q);
}

struct NamedKernel {
  std::string name;
  RateKernel kernel;
};

std::vector<NamedKernel> small_models() {
  std::vector<NamedKernel> out;
  out.push_back({"two-state(1,2)", two_state(1.0, 2.0)});
  for (std::uint64_t s : {101u, 202u, 303u})
    out.push_back({"random5-seed" + std::to_string(s), random_kernel(s, 5)});
  return out;
}

TransitionOptions oscillator_options(const RateKernel& k, Real tol) {
  TransitionOptions o;
  o.tol = tol;
  o.monitored = oscillator_targets(k, 8);
  return o;
}

// ---------------------------------------------------------------- 1

CriterionOutcome criterion1(const Params& p) {
  CriterionOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const RateKernel k = fms_oscillator(static_cast<int>(preal(p, "J")));
  const TimeGrid grid = TimeGrid::for_kernel(k, 0.0, 1.0, preal(p, "grid_step"));
  const TransitionTable tab = minimal_transition(k, 0.0, Index(0), grid, oscillator_options(k, preal(p, "tol")));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const RowVector row = tab.from(0).values.row(static_cast<Index>(grid.size() - 1));
  Real worst = std::abs(row(k.space().index_of("0")) - std::exp(-1.0));
  json entries = json::array();
  entries.push_back({{"j", 0}, {"value", row(k.space().index_of("0"))}, {"expected", std::exp(-1.0)}});
  for (int j = -8; j <= 8; ++j) {
    if (j == 0) continue;
    const Real expected = (1.0 - std::exp(-1.0)) / std::ldexp(1.0, std::abs(j) + 1);
    const Real v = row(k.space().index_of(std::to_string(j)));
    worst = std::max(worst, std::abs(v - expected));
    entries.push_back({{"j", j}, {"value", v}, {"expected", expected}});
  }
  out.passed = worst <= 1e-5 && secs < 30.0;
  out.summary = fmt("max error %.2e (tol 1e-5), %d terms, %.2f s (target < 30 s)", worst,
                    tab.from(0).n_terms, secs);
  out.report = {{"max_error", worst}, {"terms", tab.from(0).n_terms}, {"seconds", secs}, {"entries", entries}};
  return out;
}

// ---------------------------------------------------------------- 2

CriterionOutcome criterion2(const Params& p) {
  CriterionOutcome out;
  const Real h = preal(p, "grid_step");
  TransitionOptions o;
  o.tol = preal(p, "tol");
  Real worst = 0.0;
  json models = json::array();
  Real hand = kInf;
  for (const auto& m : small_models()) {
    const auto starts = all_states(m.kernel);
    const TimeGrid grid = TimeGrid::for_kernel(m.kernel, 0.0, 5.0, h);
    const TransitionTable mt = minimal_transition(m.kernel, 0.0, starts, grid, o);
    const TransitionTable ode = ode_oracle(m.kernel, 0.0, starts, grid);
    Real model_worst = 0.0;
    for (Real t : {0.1, 1.0, 5.0}) {
      const auto node = static_cast<std::size_t>(grid.find(t));
      for (Index x : starts)
        model_worst = std::max(model_worst, (mt.from(x).values.row(static_cast<Index>(node)) -
                                             ode.from(x).values.row(static_cast<Index>(node)))
                                                .cwiseAbs()
                                                .maxCoeff());
    }
    if (m.name == "two-state(1,2)")
      hand = std::abs(mt.value(0, static_cast<std::size_t>(grid.find(1.0)), 0) -
                      (2.0 / 3.0 + std::exp(-3.0) / 3.0));
    worst = std::max(worst, model_worst);
    models.push_back({{"model", m.name}, {"max_diff", model_worst}});
  }
  out.passed = worst <= 1e-6 && hand <= 1e-6;
  out.summary = fmt("max |P - expm| %.2e, hand value error %.2e (tol 1e-6)", worst, hand);
  out.report = {{"max_diff", worst}, {"hand_value_error", hand}, {"models", models}};
  return out;
}

// ---------------------------------------------------------------- 3

CriterionOutcome criterion3(const Params& p) {
  CriterionOutcome out;
  const Real h = preal(p, "grid_step");
  const Real s = 0.5, t = 1.0;
  json models = json::array();
  Real worst = 0.0;
  auto check = [&](const std::string& name, const RateKernel& k, const std::vector<Index>& starts,
                   const std::vector<Index>& targets, const TransitionOptions& o) {
    const TransitionTable from_u = minimal_transition(k, 0.0, starts, TimeGrid::for_kernel(k, 0.0, t, h), o);
    std::vector<Index> mid;
    for (Index x : starts)
      for (Index y : required_intermediate_states(k, from_u, x, s, targets))
        if (std::find(mid.begin(), mid.end(), y) == mid.end()) mid.push_back(y);
    std::sort(mid.begin(), mid.end());
    const TransitionTable from_s = minimal_transition(k, s, mid, TimeGrid::for_kernel(k, s, t, h), o);
    Real r = 0.0;
    for (Index x : starts) r = std::max(r, chapman_kolmogorov_residual(k, from_u, x, from_s, s, t, targets));
    worst = std::max(worst, r);
    models.push_back({{"model", name}, {"residual", r}, {"intermediate_states", mid.size()}});
  };
  const RateKernel osc = fms_oscillator(static_cast<int>(preal(p, "J")));
  check("fms-oscillator", osc, {0}, oscillator_targets(osc, 8), oscillator_options(osc, preal(p, "tol")));
  TransitionOptions o;
  o.tol = preal(p, "tol");
  for (const auto& m : small_models()) check(m.name, m.kernel, all_states(m.kernel), all_states(m.kernel), o);
  out.passed = worst <= 1e-6;
  out.summary = fmt("max residual %.2e at (u,s,t)=(0,0.5,1) (tol 1e-6)", worst);
  out.report = {{"max_residual", worst}, {"models", models}};
  return out;
}

// ---------------------------------------------------------------- 4

CriterionOutcome criterion4(const Params& p) {
  CriterionOutcome out;
  const Real h = preal(p, "grid_step");
  const Real dtol = preal(p, "diff_tol"), itol = preal(p, "integral_tol");
  ResidualReport bdiff, bint, fdiff, fint;
  Real neg_b = kInf, neg_f = kInf;
  TransitionOptions o;
  o.tol = preal(p, "tol");
  for (const auto& m : small_models()) {
    const auto& k = m.kernel;
    const auto all = all_states(k);
    for (Index b : all) {
      const BackwardSlices sl = backward_slices(k, 0.0, 1.0, h, {b}, o);
      bdiff.append(backward_residual(k, sl, all, dtol));
      bint.append(backward_integral_check(k, sl, all, 5, itol));
      neg_b = std::min(neg_b, backward_integral_check(k, scaled(sl, 0.9), all, 5, itol).max());
    }
    const TransitionTable tab = minimal_transition(k, 0.0, all, TimeGrid::for_kernel(k, 0.0, 1.0, h), o);
    const TransitionTable bad = tab.scaled(0.9);
    for (Index x : all)
      for (Index b : all) {
        const std::vector<Index> B{b};
        fdiff.append(forward_residual(k, tab, x, B, 1.0, dtol));
        fint.append(forward_integral_check(k, tab, x, B, 1.0, itol));
        if (x == b) neg_f = std::min(neg_f, forward_integral_check(k, bad, x, B, 1.0, itol).max());
      }
  }
  const RateKernel osc = fms_oscillator(static_cast<int>(preal(p, "J")));
  const TransitionTable tab =
      minimal_transition(osc, 0.0, Index(0), TimeGrid::for_kernel(osc, 0.0, 1.0, h), oscillator_options(osc, o.tol));
  const TransitionTable bad = tab.scaled(0.9);
  for (const char* label : {"0", "1", "-1", "8", "-8"}) {
    const std::vector<Index> B{osc.space().index_of(label)};
    fdiff.append(forward_residual(osc, tab, 0, B, 1.0, dtol));
    fint.append(forward_integral_check(osc, tab, 0, B, 1.0, itol));
  }
  const std::vector<Index> zero{0};
  neg_f = std::min(neg_f, forward_integral_check(osc, bad, 0, zero, 1.0, itol).max());
  for (const char* label : {"0", "1"}) {
    const BackwardSlices sl = backward_slices(osc, 0.0, 1.0, h, {osc.space().index_of(label)});
    bdiff.append(backward_residual(osc, sl, zero, dtol));
    bint.append(backward_integral_check(osc, sl, zero, 5, itol));
    if (std::string(label) == "0")
      neg_b = std::min(neg_b, backward_integral_check(osc, scaled(sl, 0.9), zero, 5, itol).max());
  }
  std::string guard = "accepted";
  bool refused = false;
  try {
    forward_residual(osc, tab, 0, all_states(osc), 1.0, dtol);
  } catch (const GuardError& e) {
    refused = true;
    guard = e.what();
  }
  out.passed = bdiff.max() <= dtol && fdiff.max() <= dtol && bint.max() <= itol &&
               fint.max() <= itol && refused && neg_b >= 0.01 && neg_f >= 0.01;
  out.summary = fmt("backward %.1e forward %.1e (tol %.0e); integral %.1e/%.1e (tol %.0e); "
                    "guard %s; 0.9*P residual %.3f/%.3f (need >= 0.01)",
                    bdiff.max(), fdiff.max(), dtol, bint.max(), fint.max(), itol,
                    refused ? "refused" : "NOT refused", neg_b, neg_f);
  out.report = {{"backward_diff_max", bdiff.max()},
                {"forward_diff_max", fdiff.max()},
                {"backward_integral_max", bint.max()},
                {"forward_integral_max", fint.max()},
                {"points", bdiff.residuals.size() + fdiff.residuals.size() + bint.residuals.size() +
                               fint.residuals.size()},
                {"guard", guard},
                {"negative_control_backward", neg_b},
                {"negative_control_forward", neg_f}};
  return out;
}

// ---------------------------------------------------------------- 5

CriterionOutcome criterion5(const Params& p) {
  CriterionOutcome out;
  out.monte_carlo = true;
  const Real b = preal(p, "base");
  const RateKernel pb = pure_birth(b, static_cast<int>(preal(p, "truncation")));
  const TimeGrid grid = TimeGrid::for_kernel(pb, 0.0, 1.0, preal(p, "grid_step"));
  TransitionOptions o;
  o.tol = preal(p, "tol");
  const Index x = pb.space().index_of("1");
  const TransitionTable tab = minimal_transition(pb, 0.0, x, grid, o);
  const Real defect = tab.from(x).mass_defect(static_cast<Index>(grid.size() - 1));
  const RateKernel pb_mc = pure_birth(b, static_cast<int>(preal(p, "mc_truncation")));
  const SimConfig cfg = sim_config(pseed(p), psize(p, "paths"), 1.0, psize(p, "max_jumps"));
  const EmpiricalTransition e = simulate_transition(pb_mc, pb_mc.space().index_of("1"), cfg);
  const Real z = std::abs(e.defect - defect) / e.defect_se;
  const Real sig = defect / e.defect_se;
  out.passed = z <= 4.0 && sig >= 10.0;
  out.summary = fmt("defect %.6f vs MC %.6f (se %.1e): |z| %.2f (<= 4), defect/se %.0f (>= 10)",
                    defect, e.defect, e.defect_se, z, sig);
  out.report = {{"defect", defect}, {"mc_defect", e.defect}, {"mc_se", e.defect_se},
                {"z", z}, {"significance", sig}, {"terms", tab.from(x).n_terms}};
  put(out.fingerprint, "mc_defect", e.defect);
  put(out.fingerprint, "mc_se", e.defect_se);
  put(out.fingerprint, "defect", defect);
  return out;
}

// ---------------------------------------------------------------- 6

CriterionOutcome criterion6(const Params& p) {
  CriterionOutcome out;
  out.monte_carlo = true;
  const RateKernel k = fms_oscillator(static_cast<int>(preal(p, "J")));
  const TimeGrid grid = TimeGrid::for_kernel(k, 0.0, 1.0, preal(p, "grid_step"));
  TransitionOptions o;
  o.tol = preal(p, "tol");
  o.max_terms = static_cast<int>(preal(p, "max_terms"));
  o.monitored = k.space().real_states();
  RowVector row;
  Real tail = 0.0;
  bool converged = true;
  try {
    row = minimal_transition(k, 0.0, Index(0), grid, o).from(0).values.row(static_cast<Index>(grid.size() - 1));
  } catch (const ConvergenceError& e) {
    converged = false;
    tail = e.tail();
    row = e.partial().from(0).values.row(static_cast<Index>(grid.size() - 1));
  }
  const std::size_t n = psize(p, "paths");
  const EmpiricalTransition emp = simulate_transition(k, 0, sim_config(pseed(p), n, 1.0, psize(p, "max_jumps")));
  Real worst = 0.0;
  std::string worst_label;
  json entries = json::array();
  for (Index y = 0; y < k.size(); ++y) {
    const Real pe = row(y), ph = emp.estimate(y);
    const Real var = std::max(pe * (1.0 - pe), ph * (1.0 - ph)) / static_cast<Real>(n);
    const Real z = var > 0.0 ? std::abs(ph - pe) / std::sqrt(var) : (ph == pe ? 0.0 : kInf);
    if (z > worst) {
      worst = z;
      worst_label = k.space().labels[y];
    }
    entries.push_back({{"state", k.space().labels[y]}, {"exact", pe}, {"mc", ph}, {"z", z}});
    put(out.fingerprint, "mc." + k.space().labels[y], ph);
  }
  out.passed = worst <= 3.0;
  out.summary = fmt("max |z| %.2f at state %s over %ld states (<= 3)%s", worst, worst_label.c_str(),
                    static_cast<long>(k.size()),
                    converged ? "" : fmt(", term sum stopped at %d terms, tail %.1e", o.max_terms, tail).c_str());
  out.report = {{"max_z", worst}, {"converged", converged}, {"tail", tail}, {"entries", entries}};
  return out;
}

// ---------------------------------------------------------------- 7-10 helpers

struct DerivedPhi {
  MarkovPolicy policy;
  MarginalTable exact;  // with batch standard errors
  std::vector<MarkovPolicy> batches;
  std::size_t fallback_bins = 0;
};

DerivedPhi derive_phi(const MdpModel& model, const Policy& pi, const RowVector& gamma,
                      Real delta, Real horizon, const std::vector<Real>& checks,
                      std::uint64_t seed, std::size_t paths, std::size_t batches,
                      std::size_t max_jumps, Real h) {
  const BinLayout bins = BinLayout::centered(delta, horizon);
  const DerivedWithErrors d = derive_with_errors(model, pi, gamma, bins, checks,
                                                 sim_config(seed, paths, horizon, max_jumps), batches, h);
  return {d.derived.policy, d.exact, d.batches, d.derived.fallback_bins};
}

json dominance_json(const DominanceReport& r) {
  json worst = json::array();
  for (const auto& e : r.entries)
    if (!e.dominated || !e.equal)
      worst.push_back({{"t", e.t}, {"x", e.x}, {"a", e.a}, {"pi", e.pi}, {"phi", e.phi}, {"se", e.se},
                       {"z", (e.phi - e.pi) / e.se}});
  return {{"entries", r.entries.size()},
          {"violations", worst},
          {"dominance_violations", r.dominance_violations},
          {"equality_violations", r.equality_violations},
          {"full_mass_times", r.full_mass_times},
          {"max_z", r.max_z}};
}

std::vector<Real> parse_times(const std::string& s) {
  std::vector<Real> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto c = s.find(',', pos);
    out.push_back(std::stod(s.substr(pos, c == std::string::npos ? std::string::npos : c - pos)));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  return out;
}

// ---------------------------------------------------------------- 7

CriterionOutcome criterion7(const Params& p) {
  CriterionOutcome out;
  out.monte_carlo = true;
  const MdpModel model = bench3();
  const RowVector gamma = bench3_gamma();
  const DepthPolicy pi = parity_policy(model);
  const auto checks = parse_times(param(p, "times"));
  const Real horizon = checks.back();
  const std::size_t paths = psize(p, "paths"), mj = psize(p, "max_jumps");
  const Real h = preal(p, "grid_step");
  const MarginalTable mc = simulate_marginals(model, pi, gamma, checks, sim_config(pseed(p), paths, horizon, mj));
  put(out.fingerprint, "pi", mc);
  bool pass = true;
  json runs = json::array();
  std::string summary;
  std::uint64_t salt = 1000;
  for (const char* key : {"delta", "delta_fine"}) {
    const Real delta = preal(p, key);
    const DerivedPhi d = derive_phi(model, pi, gamma, delta, horizon, checks, pseed(p) + salt, paths,
                                    psize(p, "batches"), mj, h);
    salt += 1000;
    const DominanceReport r = verify_dominance(mc, d.exact, model.space);
    const bool ok = r.dominance_holds() && r.equality_holds() && r.full_mass_times.size() == checks.size();
    pass = pass && ok;
    json j = dominance_json(r);
    j["delta"] = delta;
    j["fallback_bins"] = d.fallback_bins;
    runs.push_back(j);
    put(out.fingerprint, std::string("phi.") + key, d.exact);
    summary += fmt("%sdelta %.3g: %zu entries, max |z| %.2f, %zu violations", summary.empty() ? "" : "; ",
                   delta, r.entries.size(), r.max_z, r.dominance_violations + r.equality_violations);
  }
  out.passed = pass;
  out.summary = summary + " (3 combined se)";
  out.report = {{"runs", runs}};
  return out;
}

// ---------------------------------------------------------------- 8

CriterionOutcome criterion8(const Params& p) {
  CriterionOutcome out;
  out.monte_carlo = true;
  const int N = static_cast<int>(preal(p, "truncation"));
  const MdpModel model = controlled_birth(N);
  const RowVector gamma = controlled_birth_gamma(N);
  const DepthPolicy pi = birth_policy(model);
  const auto checks = parse_times(param(p, "times"));
  const Real horizon = checks.back();
  const std::size_t paths = psize(p, "paths"), mj = psize(p, "max_jumps");
  const MarginalTable mc = simulate_marginals(model, pi, gamma, checks, sim_config(pseed(p), paths, horizon, mj));
  const DerivedPhi d = derive_phi(model, pi, gamma, preal(p, "delta"), horizon, checks, pseed(p) + 1000,
                                  paths, psize(p, "batches"), mj, preal(p, "grid_step"));
  const DominanceReport r = verify_dominance(mc, d.exact, model.space);
  const auto last = static_cast<Index>(checks.size() - 1);
  Real pi_mass = 0.0, phi_mass = 0.0;
  for (Index x : model.space.real_states()) {
    pi_mass += mc.state(last, x);
    phi_mass += d.exact.state(last, x);
  }
  out.passed = r.dominance_holds();
  out.summary = fmt("%zu entries, %zu dominance violations, max z %.2f; mass at t=%.3g: pi %.4f, phi %.4f",
                    r.entries.size(), r.dominance_violations, r.max_z, checks.back(), pi_mass, phi_mass);
  out.report = dominance_json(r);
  out.report["pi_mass"] = pi_mass;
  out.report["phi_mass"] = phi_mass;
  put(out.fingerprint, "pi", mc);
  put(out.fingerprint, "phi", d.exact);
  return out;
}

// ---------------------------------------------------------------- 9

CriterionOutcome criterion9(const Params& p) {
  CriterionOutcome out;
  out.monte_carlo = true;
  const MdpModel model = bench3();
  const RowVector gamma = bench3_gamma();
  const DepthPolicy pi = parity_policy(model);
  const std::size_t paths = psize(p, "paths"), mj = psize(p, "max_jumps");
  const Real h = preal(p, "grid_step");
  const std::uint64_t seed = pseed(p);
  json rep;

  // c = 1, alpha = 1
  const Real H = preal(p, "truncation_horizon");
  const CostModel unit = CostModel::constant_running(model, 1.0, 1.0);
  const CostValue v_mc = evaluate_cost_mc(model, pi, gamma, unit, Criterion::infinite_discounted, H,
                                          sim_config(seed, psize(p, "unit_paths"), H, mj));
  const CostValue v_ex = evaluate_cost_exact(model, uniform_policy(model), gamma, unit,
                                             Criterion::infinite_discounted, H, h);
  const bool unit_ok = std::abs(v_mc.value - 1.0) <= 3.0 * v_mc.std_error + v_mc.tail_bound + 1e-9 &&
                       std::abs(v_ex.value - 1.0) <= 1e-4 + v_ex.tail_bound;
  rep["unit"] = {{"mc", v_mc.value}, {"mc_se", v_mc.std_error}, {"exact", v_ex.value}, {"tail", v_mc.tail_bound}};

  // V(pi) = V(phi) on a finite horizon
  const Real T = preal(p, "horizon");
  CostModel cost;
  cost.running = Matrix(model.size(), model.n_actions());
  for (Index x = 0; x < model.size(); ++x) {
    cost.running(x, model.action_index("slow")) = 1.0 + static_cast<Real>(x);
    cost.running(x, model.action_index("fast")) = 3.0 - static_cast<Real>(x);
  }
  cost.alpha = DiscountRate::constant(1.0);
  const CostValue vpi = evaluate_cost_mc(model, pi, gamma, cost, Criterion::finite_horizon, T,
                                         sim_config(seed + 1, paths, T, mj));
  const DerivedPhi d = derive_phi(model, pi, gamma, preal(p, "delta"), T, {T}, seed + 1000, paths,
                                  psize(p, "batches"), mj, h);
  const Real vphi = evaluate_cost_exact(model, d.policy, gamma, cost, Criterion::finite_horizon, T, h).value;
  Real s1 = 0.0, s2 = 0.0;
  for (const auto& b : d.batches) {
    const Real v = evaluate_cost_exact(model, b, gamma, cost, Criterion::finite_horizon, T, h).value;
    s1 += v;
    s2 += v * v;
  }
  const Real B = static_cast<Real>(d.batches.size());
  const Real se_phi = std::sqrt(std::max(0.0, (s2 / B - (s1 / B) * (s1 / B)) * B / (B - 1.0)) / B);
  const Real se = std::sqrt(vpi.std_error * vpi.std_error + se_phi * se_phi) + 1e-9;
  const Real z_cost = std::abs(vpi.value - vphi) / se;
  rep["equality"] = {{"v_pi", vpi.value}, {"se_pi", vpi.std_error}, {"v_phi", vphi}, {"se_phi", se_phi}, {"z", z_cost}};

  // terminal cost
  const Real g = preal(p, "terminal_cost");
  CostModel term;
  term.running = Matrix::Zero(model.size(), model.n_actions());
  term.alpha = DiscountRate::constant(0.0);
  term.instant.push_back({T, Matrix::Constant(model.size(), model.n_actions(), g)});
  const CostValue t_mc = evaluate_cost_mc(model, pi, gamma, term, Criterion::finite_horizon, T,
                                          sim_config(seed + 2, psize(p, "unit_paths"), T, mj));
  const CostValue t_ex = evaluate_cost_exact(model, d.policy, gamma, term, Criterion::finite_horizon, T, h);
  const bool term_ok = std::abs(t_mc.value - g) <= 3.0 * t_mc.std_error + 1e-9 &&
                       std::abs(t_ex.value - g) <= 1e-6 * g;
  rep["terminal"] = {{"g", g}, {"mc", t_mc.value}, {"mc_se", t_mc.std_error}, {"exact", t_ex.value}};

  out.passed = unit_ok && z_cost <= 3.0 && term_ok;
  out.summary = fmt("c=1: MC %.10f exact %.8f; V(pi) %.5f vs V(phi) %.5f |z| %.2f; terminal %.6g / %.6g (g=%g)",
                    v_mc.value, v_ex.value, vpi.value, vphi, z_cost, t_mc.value, t_ex.value, g);
  out.report = rep;
  put(out.fingerprint, "unit_mc", v_mc.value);
  put(out.fingerprint, "v_pi", vpi.value);
  put(out.fingerprint, "se_pi", vpi.std_error);
  put(out.fingerprint, "v_phi", vphi);
  put(out.fingerprint, "se_phi", se_phi);
  put(out.fingerprint, "terminal_mc", t_mc.value);
  return out;
}

// ---------------------------------------------------------------- 10

CriterionOutcome criterion10(const Params& p) {
  CriterionOutcome out;
  out.monte_carlo = true;
  const MdpModel model = bench3();
  const RowVector gamma = bench3_gamma();
  const DepthPolicy pi = parity_policy(model);
  const Real u = preal(p, "u");
  const ExpandedModel ex = expand_with_initial_state(model, gamma, u);
  const LiftedPolicy lifted(ex, pi);
  const auto checks = parse_times(param(p, "times"));
  std::vector<Real> shifted;
  for (Real t : checks) shifted.push_back(t + u);
  const std::size_t paths = psize(p, "paths"), mj = psize(p, "max_jumps");
  const MarginalTable me = simulate_marginals(ex.model, lifted, ex.gamma, shifted,
                                              sim_config(pseed(p), paths, shifted.back(), mj));
  const MarginalTable mo = simulate_marginals(model, pi, gamma, checks,
                                              sim_config(pseed(p) + 1, paths, checks.back(), mj));
  const auto last = static_cast<Index>(checks.size() - 1);
  const Real stay = me.state(last, ex.x_prime);
  const Real stay_se = me.state_se(last, ex.x_prime);
  const Real z_stay = std::abs(stay - ex.stay_probability) / stay_se;
  const Real scale = 1.0 - ex.stay_probability;
  Real worst = 0.0;
  for (std::size_t k = 0; k < checks.size(); ++k) {
    const auto K = static_cast<Index>(k);
    for (Index x = 0; x < model.size(); ++x) {
      const Real se = std::hypot(me.state_se(K, x) / scale, mo.state_se(K, x)) + 1e-9;
      worst = std::max(worst, std::abs(me.state(K, x) / scale - mo.state(K, x)) / se);
      for (Index a = 0; a < model.n_actions(); ++a) {
        const Real sa = std::hypot(me.state_action_se[k](x, a) / scale, mo.state_action_se[k](x, a)) + 1e-9;
        worst = std::max(worst, std::abs(me.state_action[k](x, a) / scale - mo.state_action[k](x, a)) / sa);
      }
    }
  }
  out.passed = z_stay <= 3.0 && worst <= 3.0;
  out.summary = fmt("stay at x' %.5f vs e^-u %.5f |z| %.2f; shift/scale max |z| %.2f (<= 3)", stay,
                    ex.stay_probability, z_stay, worst);
  out.report = {{"stay", stay}, {"stay_se", stay_se}, {"expected", ex.stay_probability},
                {"z_stay", z_stay}, {"shift_scale_max_z", worst}};
  put(out.fingerprint, "expanded", me);
  put(out.fingerprint, "original", mo);
  return out;
}

}  // namespace

std::string criterion_title(int id) {
  static const char* titles[] = {"",
                                 "oscillator closed form",
                                 "oracle equivalence",
                                 "Chapman-Kolmogorov",
                                 "equation suite",
                                 "explosion defect",
                                 "simulation matches minimal solution",
                                 "Markov reduction, bounded rates",
                                 "dominance, explosive case",
                                 "cost criteria",
                                 "expansion construction",
                                 "determinism"};
  if (id < 1 || id > kCriteria) throw ConfigurationError("no criterion " + std::to_string(id));
  return titles[id];
}

Params criterion_params(int id, std::uint64_t seed) {
  Params p{{"criterion", std::to_string(id)},
           {"seed", std::to_string(seed + 7919u * static_cast<std::uint64_t>(id))},
           {"grid_step", "0.001"},
           {"tol", "1e-07"}};
  switch (id) {
    case 1:
    case 2:
    case 3:
      p["J"] = "20";
      break;
    case 4:
      p["J"] = "20";
      p["diff_tol"] = "0.0001";
      p["integral_tol"] = "1e-06";
      break;
    case 5:
      p["base"] = "2";
      p["truncation"] = "40";
      p["mc_truncation"] = "80";
      p["paths"] = "1000000";
      p["max_jumps"] = "60";
      break;
    case 6:
      p["J"] = "20";
      p["paths"] = "100000";
      p["max_jumps"] = "100000000";
      p["max_terms"] = "20000";
      break;
    case 7:
      p["paths"] = "1000000";
      p["max_jumps"] = "100000";
      p["delta"] = "0.05";
      p["delta_fine"] = "0.025";
      p["batches"] = "10";
      p["times"] = "0.25,0.5,1,2";
      break;
    case 8:
      p["truncation"] = "40";
      p["paths"] = "1000000";
      p["max_jumps"] = "60";
      p["delta"] = "0.05";
      p["batches"] = "10";
      p["times"] = "0.25,0.5,1";
      break;
    case 9:
      p["paths"] = "1000000";
      p["unit_paths"] = "100000";
      p["max_jumps"] = "100000";
      p["truncation_horizon"] = "20";
      p["horizon"] = "2";
      p["delta"] = "0.025";
      p["batches"] = "10";
      p["terminal_cost"] = "2.5";
      break;
    case 10:
      p["paths"] = "1000000";
      p["max_jumps"] = "100000";
      p["u"] = "1";
      p["times"] = "0.25,0.5,1,2";
      break;
    default:
      break;
  }
  return p;
}

CriterionOutcome run_criterion(int id, const Params& params) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionOutcome out;
  switch (id) {
    case 1: out = criterion1(params); break;
    case 2: out = criterion2(params); break;
    case 3: out = criterion3(params); break;
    case 4: out = criterion4(params); break;
    case 5: out = criterion5(params); break;
    case 6: out = criterion6(params); break;
    case 7: out = criterion7(params); break;
    case 8: out = criterion8(params); break;
    case 9: out = criterion9(params); break;
    case 10: out = criterion10(params); break;
    default: throw ConfigurationError("criterion " + std::to_string(id) + " has no runner");
  }
  out.id = id;
  out.title = criterion_title(id);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.report["params"] = params;
  return out;
}

bool AcceptanceRun::all_passed() const {
  for (const auto& o : outcomes)
    if (!o.passed) return false;
  return !outcomes.empty();
}

bool replay_matches(const RunManifest& manifest, const json& expected, json* replayed) {
  const int id = std::stoi(param(manifest.params, "criterion"));
  const CriterionOutcome again = run_criterion(id, manifest.params);
  if (replayed) *replayed = again.fingerprint;
  return again.fingerprint.dump() == expected.dump();
}

namespace {

void print_line(std::ostream& log, const CriterionOutcome& o) {
  log << fmt("[%s] %2d %-38s %s (%.1f s)", o.passed ? "PASS" : "FAIL", o.id, o.title.c_str(),
             o.summary.c_str(), o.seconds)
      << std::endl;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw ConfigurationError("cannot write '" + path + "'");
  f << j.dump(2) << "\n";
}

}  // namespace

AcceptanceRun run_acceptance(const std::string& out_dir, std::uint64_t seed, std::ostream& log,
                             const std::vector<int>& only) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "manifests");
  auto selected = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  AcceptanceRun run;
  std::vector<std::pair<std::string, json>> manifests;
  for (int id = 1; id < kCriteria; ++id) {
    if (!selected(id)) continue;
    const Params params = criterion_params(id, seed);
    CriterionOutcome o;
    try {
      o = run_criterion(id, params);
    } catch (const std::exception& e) {
      o.id = id;
      o.title = criterion_title(id);
      o.passed = false;
      o.summary = std::string("error: ") + e.what();
    }
    print_line(log, o);
    write_json((fs::path(out_dir) / ("criterion-" + std::to_string(id) + ".json")).string(),
               {{"id", id}, {"title", o.title}, {"passed", o.passed}, {"summary", o.summary},
                {"seconds", o.seconds}, {"report", o.report}, {"fingerprint", o.fingerprint}});
    if (o.monte_carlo) {
      RunManifest m;
      m.command = "accept";
      m.argv = {"mjp", "accept", "--criterion", std::to_string(id), "--seed", std::to_string(seed)};
      m.params = params;
      const auto path = (fs::path(out_dir) / "manifests" / ("criterion-" + std::to_string(id) + ".json")).string();
      m.write(path);
      manifests.emplace_back(path, o.fingerprint);
    }
    run.outcomes.push_back(std::move(o));
  }
  if (selected(kCriteria)) {
    CriterionOutcome o;
    o.id = kCriteria;
    o.title = criterion_title(kCriteria);
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t matched = 0;
    json detail = json::array();
    for (const auto& [path, fp] : manifests) {
      bool ok = false;
      try {
        ok = replay_matches(RunManifest::read(path), fp);
      } catch (const std::exception& e) {
        detail.push_back({{"manifest", path}, {"error", e.what()}});
      }
      matched += ok;
      detail.push_back({{"manifest", path}, {"identical", ok}});
    }
    o.passed = !manifests.empty() && matched == manifests.size();
    o.summary = fmt("%zu of %zu manifests replayed bit-identically", matched, manifests.size());
    o.report = {{"replays", detail}};
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print_line(log, o);
    run.outcomes.push_back(std::move(o));
  }
  return run;
}

}  // namespace mjp
