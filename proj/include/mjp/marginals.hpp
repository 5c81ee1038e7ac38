#ifndef MJP_MARGINALS_HPP
#define MJP_MARGINALS_HPP

#include "mjp/policy.hpp"
#include "mjp/transition.hpp"

#include <string>
#include <vector>

namespace mjp {

/// P(t, {x}) and P(t, {x}, {a}) on a list of times.
struct MarginalTable {
  std::vector<Real> times;
  Matrix state;                      // times x states
  Matrix state_se;
  std::vector<Matrix> state_action;  // per time: states x actions
  std::vector<Matrix> state_action_se;
  std::string source;                // "monte_carlo" or "forward_ode"
  std::size_t paths = 0;

  Real total(std::size_t k) const { return state.row(static_cast<Index>(k)).sum(); }
  /// Index of time t (within 1e-12), or throws.
  std::size_t time_index(Real t) const;
};

/// Streaming Monte Carlo accumulator. The state-action entries use the
/// mixture in force at t, so they sum over actions to the state entry.
class MarginalAccumulator {
 public:
  MarginalAccumulator(std::vector<Real> times, Index n_states, Index n_actions);
  void add(const PathRecord& p);
  void merge(const MarginalAccumulator& o);
  MarginalTable table() const;

 private:
  std::vector<Real> times_;
  std::size_t n_ = 0;
  Matrix s_;
  std::vector<Matrix> sa_, sa2_;
};

MarginalTable estimate_marginals(const std::vector<PathRecord>& paths,
                                 std::vector<Real> times, Index n_states,
                                 Index n_actions);

/// Simulate cfg.replications paths and accumulate without storing them.
MarginalTable simulate_marginals(const MdpModel& model, const Policy& policy,
                                 const RowVector& gamma, std::vector<Real> times,
                                 const SimConfig& cfg);

struct DerivedPolicy {
  MarkovPolicy policy;
  std::size_t fallback_bins = 0;     // (x, bin) pairs with zero state mass
  std::size_t renormalized_bins = 0;
  std::vector<std::string> log;
};

/// phi(a|x,bin) = P(t,{x},{a}) / P(t,{x}) at the bin's representative time;
/// default action where the state mass is zero. `marginals.times` must be
/// the representative times of `bins`.
DerivedPolicy derive_markov_policy(const MarginalTable& marginals,
                                   const MdpModel& model, const BinLayout& bins);

/// Marginals of a Markov policy from the minimal transition function of the
/// induced kernel, mixed over gamma.
MarginalTable markov_forward_marginals(const MdpModel& model,
                                       const MarkovPolicy& policy,
                                       const RowVector& gamma,
                                       std::vector<Real> times, Real h = 1e-3,
                                       const TransitionOptions& opts = {});

/// phi derived from cfg.replications paths of pi, its exact marginals at
/// `times`, and standard errors of those marginals from `batches` further
/// derivations (seeds cfg.seed + 1 + b) of cfg.replications / batches paths.
struct DerivedWithErrors {
  DerivedPolicy derived;
  MarginalTable exact;
  std::vector<MarkovPolicy> batches;
};

DerivedWithErrors derive_with_errors(const MdpModel& model, const Policy& pi,
                                     const RowVector& gamma, const BinLayout& bins,
                                     std::vector<Real> times, const SimConfig& cfg,
                                     std::size_t batches, Real h = 1e-3,
                                     const TransitionOptions& opts = {});

struct DominanceEntry {
  Real t;
  Index x;
  Index a;  // -1 for the state marginal
  Real pi;
  Real phi;
  Real se;  // combined standard error
  bool dominated;
  bool equality_checked;
  bool equal;
};

struct DominanceReport {
  std::vector<DominanceEntry> entries;
  std::size_t dominance_violations = 0;
  std::size_t equality_violations = 0;
  std::vector<Real> full_mass_times;  // phi-side total >= 1 - mass_tol
  Real max_z = 0.0;                   // largest |phi - pi| / se
  bool dominance_holds() const { return dominance_violations == 0; }
  bool equality_holds() const { return equality_violations == 0; }
};

/// phi <= pi + k se at every real state; two-sided where the phi side keeps
/// full mass. se = sqrt(se_pi^2 + se_phi^2) + floor.
DominanceReport verify_dominance(const MarginalTable& pi, const MarginalTable& phi,
                                 const StateSpace& space, Real k = 3.0, Real mass_tol = 1e-6,
                                 Real floor = 1e-9);

struct GkeInterval {
  Real t0, t1;
  Real mass_change;  // P(t1,B) - P(t0,B)
  Real net_flow;     // int inflow - outflow
  Real residual;     // mass_change - net_flow
  Real se;
};

struct GkeReport {
  std::vector<GkeInterval> intervals;
  Real max_z = 0.0;
};

/// Integrated form of the generalized forward identity on B, estimated per
/// interval of `times` from paths started at x. Refuses sets containing a
/// state with unbounded controlled rates.
GkeReport gke_residual(const MdpModel& model, const Policy& policy, Index x,
                       std::span<const Index> set, const std::vector<Real>& times,
                       const SimConfig& cfg);

}  // namespace mjp

#endif  // MJP_MARGINALS_HPP
