#ifndef MJP_GRID_HPP
#define MJP_GRID_HPP

#include "mjp/types.hpp"

#include <span>
#include <vector>

namespace mjp {

class RateKernel;

/// Time nodes u, u+h, ..., t_end, refined so that kernel breakpoints in
/// (u, t_end) are nodes. The last node is exactly t_end.
class TimeGrid {
 public:
  TimeGrid(Real u, Real t_end, Real h, std::span<const Real> breakpoints = {});
  /// Grid refined to the breakpoints of `kernel`.
  static TimeGrid for_kernel(const RateKernel& kernel, Real u, Real t_end, Real h);

  Real start() const { return nodes_.front(); }
  Real end() const { return nodes_.back(); }
  Real step() const { return h_; }
  std::size_t size() const { return nodes_.size(); }
  Real operator[](std::size_t k) const { return nodes_[k]; }
  const std::vector<Real>& nodes() const { return nodes_; }

  /// Index of the node equal to t (within 1e-9 * h), or -1.
  long find(Real t) const;
  /// Largest k with nodes[k] <= t.
  std::size_t locate(Real t) const;
  /// Same nodes, with every step halved.
  TimeGrid halved() const;

 private:
  TimeGrid() = default;
  Real h_ = 0.0;
  std::vector<Real> nodes_;
};

/// Integral of tabulated values over grid nodes [0, last]: composite Simpson
/// over pairs of equal steps, trapezoid for any leftover step.
Real integrate_nodes(std::span<const Real> nodes, std::span<const Real> values);

/// Weights (w0, w1) of  int_0^h e^{-a (h - s)/h} f(s) ds  for f linear
/// between f(0) and f(h): the result is w0 f(0) + w1 f(h).
struct ExpWeights {
  Real decay;  // e^{-a}
  Real w0;
  Real w1;
};
ExpWeights exp_trapezoid_weights(Real a, Real h);

}  // namespace mjp

#endif  // MJP_GRID_HPP
