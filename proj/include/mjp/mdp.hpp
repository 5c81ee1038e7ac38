#ifndef MJP_MDP_HPP
#define MJP_MDP_HPP

#include "mjp/qkernel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mjp {

/// A decision rule returned mass outside A(x) or did not sum to one.
class PolicyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Controlled rates q~(x, a, .) on a finite state space; window [0, inf).
struct MdpModel {
  StateSpace space;
  std::vector<std::string> actions;
  std::vector<std::vector<Index>> available;  // A(x), action indices
  std::vector<Index> default_action;          // phi_0(x)
  /// rates[x][a] is the generator row of (x, a); empty when a is not in A(x).
  std::vector<std::vector<RowVector>> rates;
  /// Exit-rate supremum of the states folded into the overflow state.
  std::optional<Real> overflow_rate_sup;

  Index size() const { return space.size(); }
  Index n_actions() const { return static_cast<Index>(actions.size()); }
  Index action_index(const std::string& label) const;
  bool is_available(Index x, Index a) const;
  const RowVector& row(Index x, Index a) const;
  Real exit_rate(Index x, Index a) const { return -row(x, a)(x); }
  /// max over A(x) of the exit rate.
  Real qbar(Index x) const;

  /// Policy-averaged generator row sum_a p(a) q~(x, a, .).
  RowVector mixed_row(Index x, const ActionVector& p) const;
  Real mixed_exit_rate(Index x, const ActionVector& p) const;

  /// Unit vector on the default action of x.
  ActionVector default_probs(Index x) const;

  /// Throws PolicyError unless p is a probability vector supported on A(x).
  void check_probs(Index x, const ActionVector& p) const;

  /// Sets every diagonal to minus the off-diagonal row sum, then validates.
  void finalize();
  void validate() const;
};

/// Three states, actions "slow" and "fast", bounded rates.
MdpModel bench3();
RowVector bench3_gamma();

/// Birth chain on {0..N-1} + overflow: "slow" moves n -> n+1 at rate 1,
/// "fast" at rate 2^n.
MdpModel controlled_birth(int N);
RowVector controlled_birth_gamma(int N);

/// Piecewise-constant discount rate alpha(t); the last value extends to inf.
struct DiscountRate {
  std::vector<Real> breaks{0.0};
  std::vector<Real> values{1.0};

  static DiscountRate constant(Real alpha);
  Real rate_at(Real t) const;
  /// int_0^t alpha.
  Real cumulative(Real t) const;
  /// int_a^b exp(-int_0^s alpha) ds.
  Real discounted_length(Real a, Real b) const;
  void validate() const;
};

struct InstantCost {
  Real u;
  Matrix G;  // states x actions
};

struct CostModel {
  Matrix running;  // states x actions
  DiscountRate alpha;
  std::vector<InstantCost> instant;
  std::optional<Matrix> jump;  // states x states

  static CostModel constant_running(const MdpModel& model, Real c, Real alpha);
  void validate(const MdpModel& model) const;
};

}  // namespace mjp

#endif  // MJP_MDP_HPP
