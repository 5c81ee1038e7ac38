#ifndef MJP_POLICY_HPP
#define MJP_POLICY_HPP

#include "mjp/mdp.hpp"
#include "mjp/simulate.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mjp {

/// Pre-t history (x0, t1, x1, ..., tn, xn).
struct History {
  Index x0 = 0;
  Real t0 = 0.0;
  std::vector<Jump> jumps;

  Index current() const { return jumps.empty() ? x0 : jumps.back().x; }
  Real last_time() const { return jumps.empty() ? t0 : jumps.back().t; }
  std::size_t depth() const { return jumps.size(); }
};

/// Decision in force on [s, s_end) of elapsed time since the last jump.
struct PolicySegment {
  Real s_end;
  ActionVector probs;
};

/// History-dependent rule, piecewise constant in the elapsed time s.
class Policy {
 public:
  virtual ~Policy() = default;
  /// Segment containing elapsed time s >= 0 after the last jump of h.
  virtual PolicySegment segment(const History& h, Real s) const = 0;
  virtual std::string name() const = 0;
};

/// Bin edges b_0 = 0 < b_1 < ... (last bin extends to inf) with the time at
/// which each bin is evaluated when a policy is derived from marginals.
struct BinLayout {
  std::vector<Real> edges;
  std::vector<Real> reps;

  /// Bins centred on k*delta: edges {0, delta/2, 3 delta/2, ...}.
  static BinLayout centered(Real delta, Real horizon);
  /// Bins [k delta, (k+1) delta) represented by their midpoints.
  static BinLayout uniform(Real delta, Real horizon);
  std::size_t bin_of(Real t) const;
  std::size_t size() const { return edges.size(); }
  void validate() const;
};

class MarkovPolicy : public Policy {
 public:
  /// probs[k] is a states x actions matrix for bin k.
  MarkovPolicy(const MdpModel& model, BinLayout bins, std::vector<Matrix> probs,
               std::string name = "markov");
  /// Time-independent rule.
  static MarkovPolicy stationary(const MdpModel& model, const Matrix& probs,
                                 std::string name = "stationary");

  PolicySegment segment(const History& h, Real s) const override;
  std::string name() const override { return name_; }

  const BinLayout& bins() const { return bins_; }
  const std::vector<Matrix>& tables() const { return probs_; }
  ActionVector probs(Index x, Real t) const;

 private:
  BinLayout bins_;
  std::vector<Matrix> probs_;
  std::string name_;
};

/// Rule depending only on (current state, number of jumps so far).
class DepthPolicy : public Policy {
 public:
  using Rule = std::function<ActionVector(Index x, std::size_t depth)>;
  DepthPolicy(const MdpModel& model, Rule rule, std::string name);
  PolicySegment segment(const History& h, Real s) const override;
  std::string name() const override { return name_; }

 private:
  const MdpModel* model_;
  Rule rule_;
  std::string name_;
};

/// Default action for elapsed time below `s_switch`, then the last available
/// action of the state.
class SwitchPolicy : public Policy {
 public:
  SwitchPolicy(const MdpModel& model, Real s_switch);
  PolicySegment segment(const History& h, Real s) const override;
  std::string name() const override { return "switch"; }

 private:
  const MdpModel* model_;
  Real s_switch_;
};

/// The (depth mod |A(x)|)-th available action.
DepthPolicy parity_policy(const MdpModel& model);
/// "fast" at even depth, (1/2, 1/2) over slow/fast at odd depth.
DepthPolicy birth_policy(const MdpModel& model);
/// Uniform over A(x).
MarkovPolicy uniform_policy(const MdpModel& model);
/// phi_0.
MarkovPolicy default_policy(const MdpModel& model);

/// Named policy: parity, birth, uniform, default, switch.
std::unique_ptr<Policy> make_policy(const std::string& name, const MdpModel& model);

/// Piecewise-constant kernel with rows sum_a phi(a|y,bin) q~(y,a,.).
RateKernel induced_kernel(const MdpModel& model, const MarkovPolicy& policy);

/// Simulate under `policy`; marks record the mixture in force on every
/// interval of constant decision.
PathRecord simulate_controlled(const MdpModel& model, const Policy& policy,
                               Index x0, const SimConfig& cfg, Rng& rng);
PathRecord simulate_controlled(const MdpModel& model, const Policy& policy,
                               const RowVector& gamma, const SimConfig& cfg, Rng& rng);

std::vector<PathRecord> simulate_controlled_paths(const MdpModel& model,
                                                  const Policy& policy,
                                                  const RowVector& gamma,
                                                  const SimConfig& cfg);

/// Mark in force at time t, or nullptr (before start, after explosion).
const ActionMark* mark_at(const PathRecord& p, Real t);

}  // namespace mjp

#endif  // MJP_POLICY_HPP
