#ifndef MJP_QKERNEL_HPP
#define MJP_QKERNEL_HPP

#include "mjp/errors.hpp"
#include "mjp/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mjp {

/// Ordered, labelled states. Sink states (the cemetery and the truncation
/// overflow) are absorbing under every kernel bound to the space.
struct StateSpace {
  std::vector<std::string> labels;
  std::optional<Index> cemetery;
  std::optional<Index> overflow;

  Index size() const { return static_cast<Index>(labels.size()); }
  Index index_of(const std::string& label) const;
  bool is_sink(Index x) const;
  std::vector<Index> real_states() const;
  void validate() const;
};

/// Half-open time window [t0, t1); t1 may be +inf.
struct TimeWindow {
  Real t0 = 0.0;
  Real t1 = kInf;

  bool contains(Real t) const { return t >= t0 && t < t1; }
};

enum class Representation { constant, piecewise, generator };

/// Closed-form rate family. `rates(t)` returns the conservative generator
/// matrix at time t. Homogeneous families are evaluated once.
struct GeneratorSpec {
  std::string name;
  std::map<std::string, Real> params;
  std::function<Matrix(Real)> rates;
  bool homogeneous = true;

  // Analytic information, used in preference to grid evaluation.
  std::optional<Vector> qbar;
  bool locally_bounded = true;
  std::optional<Vector> window_integral;

  // Upper bound of q(x, .) on [a, b]; required for thinning when the family
  // is not homogeneous.
  std::function<Real(Index, Real, Real)> majorant;
};

struct JumpTarget {
  Index y;
  Real rate;
};

/// A conservative Q-function on a finite (or truncated countable) space.
///
/// Rows hold off-diagonal rates q(x,t,{y}) and the diagonal -q(x,t).
/// Piecewise kernels are right-continuous: piece k is in force on
/// [b_k, b_{k+1}).
class RateKernel {
 public:
  static constexpr Real kRowSumTolerance = 1e-12;
  static constexpr Real kRepairTolerance = 1e-9;

  static RateKernel constant(StateSpace space, TimeWindow window, Matrix rates);
  static RateKernel piecewise(StateSpace space, TimeWindow window,
                              std::vector<Real> breakpoints,
                              std::vector<Matrix> rates);
  static RateKernel generator(StateSpace space, TimeWindow window,
                              GeneratorSpec spec);

  const StateSpace& space() const { return space_; }
  const TimeWindow& window() const { return window_; }
  Representation representation() const { return representation_; }
  Index size() const { return space_.size(); }
  const GeneratorSpec* generator_spec() const {
    return spec_ ? &*spec_ : nullptr;
  }

  /// True when the rates do not depend on time.
  bool time_homogeneous() const;

  /// Generator matrix in force at t (right limit).
  Matrix matrix_at(Real t) const;
  /// Left limit of the generator matrix at t.
  Matrix matrix_left(Real t) const;

  /// Piece structure for constant/piecewise/homogeneous kernels; empty for
  /// time-varying closed forms.
  const std::vector<Real>& breakpoints() const { return breaks_; }
  const std::vector<Matrix>& pieces() const { return mats_; }
  std::size_t piece_index(Real t) const;

  /// Breakpoints strictly inside (a, b).
  std::vector<Real> breakpoints_in(Real a, Real b) const;

  Real total_rate(Index x, Real t) const;
  Real jump_measure(Index x, Real t, std::span<const Index> targets) const;

  /// Cumulative hazard of state x over [a, b]. Exact for piecewise-constant
  /// kernels, composite trapezoid with `steps` panels otherwise.
  Real hazard(Index x, Real a, Real b, int steps = 64) const;

  /// Upper bound of q(x, .) on [a, b].
  Real majorant(Index x, Real a, Real b) const;

  /// y is a possible jump target of x at some time in the window.
  const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& support() const {
    return support_;
  }

  /// False when x never jumps (sink states, empty support row).
  bool can_leave(Index x) const { return leaves_[static_cast<std::size_t>(x)]; }

  /// Positive off-diagonal entries of row x of piece k.
  const std::vector<JumpTarget>& targets(std::size_t piece, Index x) const {
    return targets_[piece][static_cast<std::size_t>(x)];
  }

  /// Supremum of the exit rates of the states folded into the overflow
  /// state (+inf when the truncated tail is unbounded).
  std::optional<Real> overflow_rate_sup() const { return overflow_sup_; }
  void set_overflow_rate_sup(Real sup) { overflow_sup_ = sup; }

  /// Diagonal adjustments made while validating (row sums off by < 1e-9).
  const std::vector<std::string>& repairs() const { return repairs_; }

 private:
  RateKernel() = default;
  void check_time(Real t) const;
  void check_index(Index x) const;
  void validate_matrix(Matrix& q, const std::string& where);
  void build_support();

  StateSpace space_;
  TimeWindow window_;
  Representation representation_ = Representation::constant;
  std::vector<Real> breaks_;
  std::vector<Matrix> mats_;
  std::optional<GeneratorSpec> spec_;
  std::optional<Real> overflow_sup_;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> support_;
  std::vector<bool> leaves_;
  std::vector<std::vector<std::vector<JumpTarget>>> targets_;
  std::vector<std::string> repairs_;
};

/// Route each row deficiency -(row sum) of a sub-conservative kernel to an
/// added absorbing state (or to the existing cemetery).
RateKernel make_conservative(StateSpace space, TimeWindow window,
                             std::vector<Real> breakpoints,
                             std::vector<Matrix> rates);
RateKernel make_conservative(StateSpace space, TimeWindow window, Matrix rates);

struct LevelSet {
  Real level;
  std::vector<Index> members;
};

struct AssumptionReport {
  bool feller = false;             // A1
  bool bounded = false;            // A2: qbar(x) < inf for every x
  bool locally_bounded = false;    // A3
  bool locally_integrable = false; // A4

  Vector qbar;
  std::string qbar_method;  // "exact", "analytic" or "grid:<n>"

  // Uniform boundedness over the whole (symbolic) space.
  bool uniformly_bounded = false;
  Real uniform_bound = kInf;
  std::optional<Index> unbounded_witness;

  // Whether the integral of q(x, .) over the full window is finite.
  std::vector<bool> window_integrable;

  std::vector<LevelSet> feller_sets;
  std::vector<std::string> notes;
};

inline constexpr int kQbarGridPoints = 10000;

AssumptionReport check_assumptions(const RateKernel& kernel);

struct QsBound {
  bool bounded = false;
  Real bound = kInf;
  std::optional<Index> witness;
};

/// Is sup{ q(x,t) : x in B, t in [t0, s) } finite?
QsBound is_qs_bounded(const RateKernel& kernel, std::span<const Index> set,
                      Real s);

/// States from which some state of `targets` is reachable.
std::vector<bool> can_reach(const RateKernel& kernel,
                            std::span<const Index> targets);

}  // namespace mjp

#endif  // MJP_QKERNEL_HPP
