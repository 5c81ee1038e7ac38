#ifndef MJP_TRANSITION_HPP
#define MJP_TRANSITION_HPP

#include "mjp/grid.hpp"
#include "mjp/qkernel.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mjp {

/// P(u, x; w, .) on the grid for one start state x.
struct TransitionRows {
  Index start = 0;
  RowMatrix values;    // grid nodes x states
  Vector mass_defect;  // 1 - mass on non-sink states, per node
  Vector term_tail;    // estimated truncation error of the term sum, per node
  int n_terms = 0;
  bool converged = true;
};

/// Transition rows from a fixed start time u for a set of start states.
class TransitionTable {
 public:
  TransitionTable(TimeGrid grid, Real u, std::vector<bool> sink)
      : grid_(std::move(grid)), u_(u), sink_(std::move(sink)) {}

  const TimeGrid& grid() const { return grid_; }
  Real start_time() const { return u_; }
  Index n_states() const { return static_cast<Index>(sink_.size()); }
  const std::vector<bool>& sink() const { return sink_; }

  void add(TransitionRows rows);
  bool has(Index x) const;
  const TransitionRows& from(Index x) const;
  std::vector<Index> starts() const;

  Real value(Index x, std::size_t node, Index y) const {
    return from(x).values(static_cast<Index>(node), y);
  }
  /// Mass of `set` at grid node.
  Real mass(Index x, std::size_t node, std::span<const Index> set) const;
  /// Row at time t, linearly interpolated between nodes.
  RowVector row_at(Index x, Real t) const;

  /// Copy with every value multiplied by c (negative controls).
  TransitionTable scaled(Real c) const;

  // Reporting metadata.
  std::string method;
  Real tolerance = 0.0;
  std::vector<Index> monitored;

 private:
  TimeGrid grid_;
  Real u_;
  std::vector<bool> sink_;
  std::map<Index, TransitionRows> rows_;
};

/// Term tables P^(n)(u, x; w, .) and their partial sums.
struct FellerTermStack {
  std::vector<RowMatrix> terms;
  std::vector<RowMatrix> partial_sums;
};

struct TransitionOptions {
  Real tol = 1e-7;
  int max_terms = 10000;
  /// Entries whose convergence decides the stopping rule (default: every
  /// state). The ratio estimate runs over all states that can reach them.
  std::vector<Index> monitored;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(TransitionTable partial, Real tail, const std::string& what)
      : Error(what), partial_(std::move(partial)), tail_(tail) {}
  const TransitionTable& partial() const { return partial_; }
  Real tail() const { return tail_; }

 private:
  TransitionTable partial_;
  Real tail_;
};

/// exp(-int_u^t q(x,s) ds).
Real survival(const RateKernel& kernel, Real u, Index x, Real t);

/// Terms 0..N of the jump-count decomposition, integrated forward in the
/// arrival time of the last jump.
FellerTermStack feller_terms(const RateKernel& kernel, Real u, Index x,
                             const TimeGrid& grid, int n_terms);

/// Minimal transition function: partial sums of the term recursion until the
/// geometric tail estimate drops below `tol`. Never renormalised.
TransitionTable minimal_transition(const RateKernel& kernel, Real u,
                                   std::span<const Index> starts,
                                   const TimeGrid& grid,
                                   const TransitionOptions& opts = {});
TransitionTable minimal_transition(const RateKernel& kernel, Real u, Index x,
                                   const TimeGrid& grid,
                                   const TransitionOptions& opts = {});

/// Single row P(u, x; t, .); identity when t == u.
RowVector minimal_transition_row(const RateKernel& kernel, Real u, Index x,
                                 Real t, Real h,
                                 const TransitionOptions& opts = {});

/// Independent oracle: matrix exponential per piece (scaling and squaring)
/// or RK4 on row' = row Q(t) for time-varying closed forms.
TransitionTable ode_oracle(const RateKernel& kernel, Real u,
                           std::span<const Index> starts, const TimeGrid& grid);
TransitionTable ode_oracle(const RateKernel& kernel, Real u, Index x,
                           const TimeGrid& grid);

/// States whose rows from time s are needed to check Chapman-Kolmogorov at
/// (u, s, t) for start x over the singletons of `targets` and their union.
std::vector<Index> required_intermediate_states(const RateKernel& kernel,
                                                const TransitionTable& from_u,
                                                Index x, Real s,
                                                std::span<const Index> targets);

/// max over B of |P(u,x;t,B) - sum_y P(s,y;t,B) P(u,x;s,{y})| with B ranging
/// over the singletons of `targets` and their union.
Real chapman_kolmogorov_residual(const RateKernel& kernel,
                                 const TransitionTable& from_u, Index x,
                                 const TransitionTable& from_s, Real s, Real t,
                                 std::span<const Index> targets);

struct SweepResult {
  std::vector<int> levels;
  std::vector<TransitionTable> tables;
  std::vector<std::string> common_labels;
  Matrix values;       // levels x common labels, at time t
  Vector kept_mass;    // mass on non-sink states, per level
  Real max_violation;  // largest decrease observed
};

/// Tables for increasing truncation levels of a named generator; throws
/// PropertyFailure when an entry decreases by more than `tol`.
SweepResult truncation_sweep(const std::string& generator,
                             std::map<std::string, Real> params,
                             const std::string& level_param,
                             const std::vector<int>& levels, Real u,
                             const std::string& start_label, Real t, Real h,
                             const std::vector<std::string>& target_labels,
                             const TransitionOptions& opts = {},
                             Real tol = 1e-9);

}  // namespace mjp

#endif  // MJP_TRANSITION_HPP
