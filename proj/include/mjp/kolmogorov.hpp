#ifndef MJP_KOLMOGOROV_HPP
#define MJP_KOLMOGOROV_HPP

#include "mjp/transition.hpp"

#include <string>
#include <vector>

namespace mjp {

enum class Equation { backward_diff, forward_diff, backward_integral, forward_integral };

std::string to_string(Equation eq);

struct EvalPoint {
  Real u;
  Index x;
  Real t;
  std::vector<Index> set;
};

struct ResidualReport {
  Equation equation = Equation::backward_diff;
  std::vector<EvalPoint> points;
  std::vector<Real> residuals;
  std::vector<bool> guard_passed;
  Real tolerance = 0.0;

  Real max() const;
  Real mean() const;
  bool passed() const { return max() <= tolerance; }
  void append(const ResidualReport& other);
};

/// P(u_k, x; t, B) for u_k on a grid ending at t. values(k, x) is the mass of
/// B; states that cannot reach B hold zero.
struct BackwardSlices {
  std::vector<Real> u_nodes;
  Real t = 0.0;
  std::vector<Index> set;
  Matrix values;  // u nodes x states
};

/// Slices computed with the term recursion. Homogeneous kernels reuse one
/// table (P(u,x;t,.) = P(0,x;t-u,.)); otherwise one table per u node.
BackwardSlices backward_slices(const RateKernel& kernel, Real u0, Real t, Real h,
                               std::vector<Index> set,
                               const TransitionOptions& opts = {});

/// Same slices from the matrix-exponential / RK4 oracle.
BackwardSlices backward_slices_oracle(const RateKernel& kernel, Real u0, Real t,
                                      Real h, std::vector<Index> set);

BackwardSlices scaled(BackwardSlices s, Real c);

/// Centered difference in u against q(x,u)P(u,x) - sum_y q(x,u,y)P(u,y).
ResidualReport backward_residual(const RateKernel& kernel,
                                 const BackwardSlices& slices,
                                 std::span<const Index> starts, Real tol = 1e-4);

/// Throws GuardError unless B is (q,s)-bounded.
void forward_guard(const RateKernel& kernel, std::span<const Index> set, Real s);

/// Centered difference in t of P(u,x;t,B) against sum_{z in B} (P Q)_z on the
/// interior nodes of (u, s).
ResidualReport forward_residual(const RateKernel& kernel,
                                const TransitionTable& table, Index x,
                                std::span<const Index> set, Real s,
                                Real tol = 1e-4);

/// P(u,x;t,B) - [1_B(x) S_x(u,t) + int_u^t S_x(u,w) sum_{y!=x} q(x,w,y)
/// P(w,y;t,B) dw], at `points` u nodes spread over the slices.
ResidualReport backward_integral_check(const RateKernel& kernel,
                                       const BackwardSlices& slices,
                                       std::span<const Index> starts,
                                       int points = 5, Real tol = 1e-6);

/// P(u,x;s,B) - [1_B(x) + int_u^s sum_{z in B} (P(u,x;w,.) Q(w))_z dw].
ResidualReport forward_integral_check(const RateKernel& kernel,
                                      const TransitionTable& table, Index x,
                                      std::span<const Index> set, Real s,
                                      Real tol = 1e-6);

}  // namespace mjp

#endif  // MJP_KOLMOGOROV_HPP
