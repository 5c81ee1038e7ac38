#include "mjp/kolmogorov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mjp {

std::string to_string(Equation eq) {
  switch (eq) {
    case Equation::backward_diff: return "backward_diff";
    case Equation::forward_diff: return "forward_diff";
    case Equation::backward_integral: return "backward_integral";
    case Equation::forward_integral: return "forward_integral";
  }
  return "unknown";
}

Real ResidualReport::max() const {
  Real m = 0.0;
  for (Real r : residuals) m = std::max(m, r);
  return m;
}

Real ResidualReport::mean() const {
  if (residuals.empty()) return 0.0;
  return std::accumulate(residuals.begin(), residuals.end(), 0.0) /
         static_cast<Real>(residuals.size());
}

void ResidualReport::append(const ResidualReport& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
  residuals.insert(residuals.end(), other.residuals.begin(), other.residuals.end());
  guard_passed.insert(guard_passed.end(), other.guard_passed.begin(),
                      other.guard_passed.end());
  tolerance = std::max(tolerance, other.tolerance);
}

namespace {

bool is_break(const RateKernel& kernel, Real t, Real h) {
  for (Real bp : kernel.breakpoints())
    if (std::abs(bp - t) <= 1e-9 * h && bp > kernel.window().t0) return true;
  return false;
}

Real set_mass(const RowVector& row, std::span<const Index> set) {
  Real m = 0.0;
  for (Index y : set) m += row(y);
  return m;
}

// Integral over nodes[k0..k1] of f(j, left), split at kernel breakpoints so
// every Simpson panel sees a smooth integrand. `left` asks for the left limit
// at the end of a segment.
template <class F>
Real integrate_split(const RateKernel& kernel, const std::vector<Real>& nodes,
                     std::size_t k0, std::size_t k1, F&& f) {
  if (k1 <= k0) return 0.0;
  Real total = 0.0;
  std::size_t a = k0;
  const Real h = nodes[k0 + 1] - nodes[k0];
  while (a < k1) {
    std::size_t b = a + 1;
    while (b < k1 && !is_break(kernel, nodes[b], h)) ++b;
    std::vector<Real> xs, vs;
    for (std::size_t j = a; j <= b; ++j) {
      xs.push_back(nodes[j]);
      vs.push_back(f(j, j == b && j != a && is_break(kernel, nodes[j], h)));
    }
    total += integrate_nodes(xs, vs);
    a = b;
  }
  return total;
}

Matrix rates_at(const RateKernel& kernel, Real t, bool left) {
  if (left) return kernel.matrix_left(t);
  if (t >= kernel.window().t1) return kernel.matrix_left(t);
  return kernel.matrix_at(t);
}

std::vector<Real> u_nodes_for(const RateKernel& kernel, Real u0, Real t, Real h) {
  return TimeGrid::for_kernel(kernel, u0, t, h).nodes();
}

template <class TableFn>
BackwardSlices build_slices(const RateKernel& kernel, Real u0, Real t, Real h,
                            std::vector<Index> set, TableFn&& make_table) {
  if (set.empty()) throw ConfigurationError("empty target set");
  BackwardSlices s;
  s.u_nodes = u_nodes_for(kernel, u0, t, h);
  s.t = t;
  s.set = set;
  const auto reach = can_reach(kernel, set);
  std::vector<Index> starts;
  for (Index y = 0; y < kernel.size(); ++y)
    if (reach[y]) starts.push_back(y);
  const std::size_t K = s.u_nodes.size();
  s.values = Matrix::Zero(static_cast<Index>(K), kernel.size());
  for (Index y : set) s.values(static_cast<Index>(K) - 1, y) = 1.0;

  if (kernel.time_homogeneous()) {
    const TimeGrid grid(u0, t, h);
    const TransitionTable table = make_table(u0, starts, grid);
    for (std::size_t k = 0; k + 1 < K; ++k) {
      const Real tau = u0 + (t - s.u_nodes[k]);
      for (Index x : starts)
        s.values(static_cast<Index>(k), x) = set_mass(table.row_at(x, std::min(tau, t)), set);
    }
  } else {
    for (std::size_t k = 0; k + 1 < K; ++k) {
      const auto grid = TimeGrid::for_kernel(kernel, s.u_nodes[k], t, h);
      const TransitionTable table = make_table(s.u_nodes[k], starts, grid);
      const std::size_t last = grid.size() - 1;
      for (Index x : starts)
        s.values(static_cast<Index>(k), x) = table.mass(x, last, set);
    }
  }
  return s;
}

}  // namespace

BackwardSlices backward_slices(const RateKernel& kernel, Real u0, Real t, Real h,
                               std::vector<Index> set,
                               const TransitionOptions& opts) {
  TransitionOptions o = opts;
  o.monitored = set;
  return build_slices(kernel, u0, t, h, std::move(set),
                      [&](Real u, const std::vector<Index>& starts, const TimeGrid& g) {
                        return minimal_transition(kernel, u, starts, g, o);
                      });
}

BackwardSlices backward_slices_oracle(const RateKernel& kernel, Real u0, Real t,
                                      Real h, std::vector<Index> set) {
  return build_slices(kernel, u0, t, h, std::move(set),
                      [&](Real u, const std::vector<Index>& starts, const TimeGrid& g) {
                        return ode_oracle(kernel, u, starts, g);
                      });
}

BackwardSlices scaled(BackwardSlices s, Real c) {
  s.values *= c;
  return s;
}

ResidualReport backward_residual(const RateKernel& kernel,
                                 const BackwardSlices& slices,
                                 std::span<const Index> starts, Real tol) {
  const auto& u = slices.u_nodes;
  if (u.size() < 3) throw ConfigurationError("backward residual needs at least 3 u nodes");
  ResidualReport rep;
  rep.equation = Equation::backward_diff;
  rep.tolerance = tol;
  const Real h = u[1] - u[0];
  for (std::size_t k = 1; k + 1 < u.size(); ++k) {
    if (is_break(kernel, u[k], h)) continue;
    const Matrix q = kernel.matrix_at(u[k]);
    const Index kk = static_cast<Index>(k);
    const Vector v = slices.values.row(kk).transpose();
    const Vector qv = q * v;
    for (Index x : starts) {
      const Real d = (slices.values(kk + 1, x) - slices.values(kk - 1, x)) / (u[k + 1] - u[k - 1]);
      rep.points.push_back({u[k], x, slices.t, slices.set});
      rep.residuals.push_back(std::abs(d + qv(x)));
      rep.guard_passed.push_back(true);
    }
  }
  return rep;
}

void forward_guard(const RateKernel& kernel, std::span<const Index> set, Real s) {
  const QsBound b = is_qs_bounded(kernel, set, s);
  if (!b.bounded) {
    const std::string w = b.witness ? kernel.space().labels[*b.witness] : std::string("?");
    throw GuardError(w, "forward equation undefined on B: exit rate of state '" + w +
                            "' is unbounded before s");
  }
}

ResidualReport forward_residual(const RateKernel& kernel,
                                const TransitionTable& table, Index x,
                                std::span<const Index> set, Real s, Real tol) {
  forward_guard(kernel, set, s);
  const auto& grid = table.grid();
  if (grid.size() < 3) throw ConfigurationError("forward residual needs at least 3 t nodes");
  const auto& rows = table.from(x).values;
  ResidualReport rep;
  rep.equation = Equation::forward_diff;
  rep.tolerance = tol;
  const std::vector<Index> b(set.begin(), set.end());
  for (std::size_t k = 1; k + 1 < grid.size() && grid[k + 1] <= s; ++k) {
    if (is_break(kernel, grid[k], grid.step())) continue;
    const Matrix q = kernel.matrix_at(grid[k]);
    Vector qb = Vector::Zero(kernel.size());
    for (Index z : set) qb += q.col(z);
    const Index kk = static_cast<Index>(k);
    const Real rhs = rows.row(kk).dot(qb.transpose());
    const Real d = (set_mass(rows.row(kk + 1), set) - set_mass(rows.row(kk - 1), set)) /
                   (grid[k + 1] - grid[k - 1]);
    rep.points.push_back({table.start_time(), x, grid[k], b});
    rep.residuals.push_back(std::abs(d - rhs));
    rep.guard_passed.push_back(true);
  }
  return rep;
}

ResidualReport backward_integral_check(const RateKernel& kernel,
                                       const BackwardSlices& slices,
                                       std::span<const Index> starts, int points,
                                       Real tol) {
  const auto& u = slices.u_nodes;
  if (u.size() < 3) throw ConfigurationError("integral check needs at least 3 u nodes");
  if (points < 1) throw ConfigurationError("points must be >= 1");
  ResidualReport rep;
  rep.equation = Equation::backward_integral;
  rep.tolerance = tol;
  const std::size_t K = u.size() - 1;
  std::vector<std::size_t> ks;
  for (int i = 0; i < points; ++i) {
    const std::size_t k = (K - 2) * static_cast<std::size_t>(i) / static_cast<std::size_t>(points);
    if (ks.empty() || ks.back() != k) ks.push_back(k);
  }
  std::vector<Matrix> q(u.size()), q_left(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    q[j] = rates_at(kernel, u[j], false);
    if (j > 0) q_left[j] = rates_at(kernel, u[j], true);
  }
  const int panels = kernel.pieces().empty() ? 256 : 1;
  for (std::size_t k : ks) {
    for (Index x : starts) {
      const Real in_b =
          std::find(slices.set.begin(), slices.set.end(), x) != slices.set.end() ? 1.0 : 0.0;
      std::vector<Real> surv(u.size(), 1.0);
      for (std::size_t j = k + 1; j < u.size(); ++j)
        surv[j] = surv[j - 1] * std::exp(-kernel.hazard(x, u[j - 1], u[j], panels));
      auto f = [&](std::size_t j, bool left) {
        const Matrix& m = left ? q_left[j] : q[j];
        Real inflow = 0.0;
        for (Index y = 0; y < kernel.size(); ++y)
          if (y != x) inflow += m(x, y) * slices.values(static_cast<Index>(j), y);
        return surv[j] * inflow;
      };
      const Real rhs = in_b * surv[K] + integrate_split(kernel, u, k, K, f);
      rep.points.push_back({u[k], x, slices.t, slices.set});
      rep.residuals.push_back(std::abs(slices.values(static_cast<Index>(k), x) - rhs));
      rep.guard_passed.push_back(true);
    }
  }
  return rep;
}

ResidualReport forward_integral_check(const RateKernel& kernel,
                                      const TransitionTable& table, Index x,
                                      std::span<const Index> set, Real s, Real tol) {
  forward_guard(kernel, set, s);
  const auto& grid = table.grid();
  const long ks = grid.find(s);
  if (ks < 0) throw ConfigurationError("s must be a grid node");
  const auto& rows = table.from(x).values;
  ResidualReport rep;
  rep.equation = Equation::forward_integral;
  rep.tolerance = tol;
  const Real in_b = std::find(set.begin(), set.end(), x) != set.end() ? 1.0 : 0.0;
  auto f = [&](std::size_t j, bool left) {
    const Matrix q = rates_at(kernel, grid[j], left);
    Real r = 0.0;
    for (Index z : set) r += rows.row(static_cast<Index>(j)).dot(q.col(z).transpose());
    return r;
  };
  const Real rhs = in_b + integrate_split(kernel, grid.nodes(), 0, static_cast<std::size_t>(ks), f);
  rep.points.push_back({table.start_time(), x, s, std::vector<Index>(set.begin(), set.end())});
  rep.residuals.push_back(std::abs(set_mass(rows.row(ks), set) - rhs));
  rep.guard_passed.push_back(true);
  return rep;
}

}  // namespace mjp
