#include "mjp/grid.hpp"

#include "mjp/errors.hpp"
#include "mjp/qkernel.hpp"

#include <algorithm>
#include <cmath>

namespace mjp {

TimeGrid::TimeGrid(Real u, Real t_end, Real h, std::span<const Real> breakpoints) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigurationError("grid step must be > 0");
  if (!(t_end > u)) throw ConfigurationError("grid needs t_end > u");
  h_ = h;
  const Real span = t_end - u;
  const auto steps = static_cast<long>(std::ceil(span / h * (1.0 - 1e-12)));
  for (long k = 0; k < steps; ++k) nodes_.push_back(u + k * h);
  nodes_.push_back(t_end);
  const Real merge = 1e-9 * h;
  for (Real bp : breakpoints) {
    if (!(bp > u && bp < t_end)) continue;
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), bp);
    const bool close_hi = it != nodes_.end() && std::abs(*it - bp) <= merge;
    const bool close_lo = it != nodes_.begin() && std::abs(*(it - 1) - bp) <= merge;
    if (close_hi) {
      *it = bp;
    } else if (close_lo) {
      *(it - 1) = bp;
    } else {
      nodes_.insert(it, bp);
    }
  }
  // drop slivers produced by rounding at the end
  if (nodes_.size() > 2 && nodes_[nodes_.size() - 1] - nodes_[nodes_.size() - 2] <= merge) {
    nodes_.erase(nodes_.end() - 2);
  }
}

TimeGrid TimeGrid::for_kernel(const RateKernel& kernel, Real u, Real t_end, Real h) {
  const auto bps = kernel.breakpoints_in(u, t_end);
  return TimeGrid(u, t_end, h, bps);
}

long TimeGrid::find(Real t) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t - 1e-9 * h_);
  if (it != nodes_.end() && std::abs(*it - t) <= 1e-9 * h_)
    return static_cast<long>(it - nodes_.begin());
  return -1;
}

std::size_t TimeGrid::locate(Real t) const {
  if (t < nodes_.front()) throw DomainError("time before grid start");
  const long exact = find(t);
  if (exact >= 0) return static_cast<std::size_t>(exact);
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

TimeGrid TimeGrid::halved() const {
  TimeGrid g;
  g.h_ = h_ / 2.0;
  for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
    g.nodes_.push_back(nodes_[k]);
    g.nodes_.push_back(0.5 * (nodes_[k] + nodes_[k + 1]));
  }
  g.nodes_.push_back(nodes_.back());
  return g;
}

Real integrate_nodes(std::span<const Real> nodes, std::span<const Real> values) {
  if (nodes.size() != values.size()) throw ConfigurationError("size mismatch");
  Real sum = 0.0;
  std::size_t k = 0;
  while (k + 1 < nodes.size()) {
    const Real h0 = nodes[k + 1] - nodes[k];
    if (k + 2 < nodes.size()) {
      const Real h1 = nodes[k + 2] - nodes[k + 1];
      if (std::abs(h1 - h0) <= 1e-9 * h0) {
        sum += (h0 + h1) / 6.0 * (values[k] + 4.0 * values[k + 1] + values[k + 2]);
        k += 2;
        continue;
      }
    }
    sum += 0.5 * h0 * (values[k] + values[k + 1]);
    ++k;
  }
  return sum;
}

ExpWeights exp_trapezoid_weights(Real a, Real h) {
  // With r the distance to the right end:
  //   w0 = h * int_0^1 e^{-a r} r dr,  w1 = h * int_0^1 e^{-a r} (1 - r) dr.
  ExpWeights w;
  w.decay = std::exp(-a);
  if (a < 1e-2) {
    // Series to O(a^6); the closed form cancels badly for small a.
    const Real a2 = a * a;
    const Real a3 = a2 * a;
    const Real a4 = a3 * a;
    const Real a5 = a4 * a;
    const Real a6 = a5 * a;
    w.w0 = h * (1.0 / 2 - a / 3 + a2 / 8 - a3 / 30 + a4 / 144 - a5 / 840 +
                a6 / 5760);
    w.w1 = h * (1.0 / 2 - a / 6 + a2 / 24 - a3 / 120 + a4 / 720 - a5 / 5040 +
                a6 / 40320);
    return w;
  }
  const Real phi1 = -std::expm1(-a) / a;                 // int e^{-ar} dr
  const Real m1 = (1.0 - w.decay * (1.0 + a)) / (a * a);  // int r e^{-ar} dr
  w.w0 = h * m1;
  w.w1 = h * (phi1 - m1);
  return w;
}

}  // namespace mjp
