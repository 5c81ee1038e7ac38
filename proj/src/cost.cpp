#include "mjp/cost.hpp"

#include <algorithm>
#include <cmath>

namespace mjp {

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::infinite_discounted: return "infinite_discounted";
    case Criterion::finite_horizon: return "finite_horizon";
    case Criterion::infinite_with_jump_costs: return "infinite_with_jump_costs";
  }
  return "unknown";
}

Criterion parse_criterion(const std::string& s) {
  if (s == "infinite_discounted") return Criterion::infinite_discounted;
  if (s == "finite_horizon") return Criterion::finite_horizon;
  if (s == "infinite_with_jump_costs") return Criterion::infinite_with_jump_costs;
  throw ConfigurationError("unknown criterion '" + s + "'");
}

namespace {

Real tail_bound(const MdpModel& model, const CostModel& cost, Criterion c, Real horizon) {
  if (c == Criterion::finite_horizon) return 0.0;
  const Real last = cost.alpha.values.back();
  const bool last_piece = cost.alpha.breaks.back() <= horizon;
  if (!(last > 0.0) || !last_piece) return kInf;
  const Real disc = std::exp(-cost.alpha.cumulative(horizon)) / last;
  Real bound = cost.running.size() ? cost.running.maxCoeff() * disc : 0.0;
  if (c == Criterion::infinite_with_jump_costs && cost.jump && cost.jump->maxCoeff() > 0.0) {
    Real q = 0.0;
    for (Index x = 0; x < model.size(); ++x) {
      if (model.space.overflow && x == *model.space.overflow && model.overflow_rate_sup)
        q = std::max(q, *model.overflow_rate_sup);
      q = std::max(q, model.qbar(x));
    }
    bound += cost.jump->maxCoeff() * q * disc;
  }
  return bound;
}

void check_horizon(const CostModel& cost, Real horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigurationError("horizon must be finite and > 0");
  for (const auto& ic : cost.instant)
    if (ic.u > horizon) throw ConfigurationError("instant cost time beyond the horizon");
}

struct CostAcc {
  std::size_t n = 0;
  Real sum = 0.0, sum2 = 0.0;
  void merge(const CostAcc& o) {
    n += o.n;
    sum += o.sum;
    sum2 += o.sum2;
  }
};

}  // namespace

Real path_cost(const PathRecord& p, const CostModel& cost, Criterion c, Real horizon) {
  Real v = 0.0;
  for (const auto& m : p.marks) {
    const Real lo = m.t_start, hi = std::min(m.t_end, horizon);
    if (hi <= lo) continue;
    Real cbar = 0.0;
    for (Index a = 0; a < m.probs.size(); ++a)
      if (m.probs(a) != 0.0) cbar += m.probs(a) * cost.running(m.x, a);
    if (cbar != 0.0) v += cbar * cost.alpha.discounted_length(lo, hi);
  }
  for (const auto& ic : cost.instant) {
    const ActionMark* m = mark_at(p, ic.u);
    if (!m) continue;
    Real g = 0.0;
    for (Index a = 0; a < m->probs.size(); ++a)
      if (m->probs(a) != 0.0) g += m->probs(a) * ic.G(m->x, a);
    v += std::exp(-cost.alpha.cumulative(ic.u)) * g;
  }
  if (c == Criterion::infinite_with_jump_costs && cost.jump) {
    Index prev = p.x0;
    for (const auto& j : p.jumps) {
      if (j.t > horizon) break;
      v += std::exp(-cost.alpha.cumulative(j.t)) * (*cost.jump)(prev, j.x);
      prev = j.x;
    }
  }
  return v;
}

CostValue evaluate_cost_mc(const MdpModel& model, const Policy& policy,
                           const RowVector& gamma, const CostModel& cost,
                           Criterion c, Real horizon, const SimConfig& cfg) {
  cost.validate(model);
  check_horizon(cost, horizon);
  if (c == Criterion::infinite_with_jump_costs && !cost.jump)
    throw ConfigurationError("jump-cost criterion needs jump costs");
  cfg.validate();
  SimConfig sc = cfg;
  sc.horizon = horizon;
  auto acc = run_chunks<CostAcc>(cfg.replications, [&](std::size_t chunk, std::size_t b, std::size_t e) {
    CostAcc a;
    Rng rng(cfg.seed, chunk);
    for (std::size_t r = b; r < e; ++r) {
      const Real v = path_cost(simulate_controlled(model, policy, gamma, sc, rng), cost, c, horizon);
      ++a.n;
      a.sum += v;
      a.sum2 += v * v;
    }
    return a;
  });
  CostValue out;
  const Real n = static_cast<Real>(acc.n);
  out.value = acc.sum / n;
  const Real var = std::max(0.0, acc.sum2 / n - out.value * out.value) * n / std::max(1.0, n - 1.0);
  out.std_error = std::sqrt(var / n);
  out.tail_bound = tail_bound(model, cost, c, horizon);
  out.horizon = horizon;
  out.route = "monte_carlo";
  out.paths = acc.n;
  return out;
}

CostValue evaluate_cost_exact(const MdpModel& model, const MarkovPolicy& policy,
                              const RowVector& gamma, const CostModel& cost,
                              Criterion c, Real horizon, Real h,
                              const TransitionOptions& opts) {
  if (c == Criterion::infinite_with_jump_costs)
    throw ConfigurationError("jump-cost criterion is supported on the Monte Carlo route only");
  cost.validate(model);
  check_horizon(cost, horizon);
  if (gamma.size() != model.size()) throw ConfigurationError("initial law has wrong size");
  const RateKernel kernel = induced_kernel(model, policy);
  std::vector<Real> breaks = kernel.breakpoints_in(0.0, horizon);
  for (Real b : cost.alpha.breaks)
    if (b > 0.0 && b < horizon) breaks.push_back(b);
  for (const auto& ic : cost.instant)
    if (ic.u > 0.0 && ic.u < horizon) breaks.push_back(ic.u);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const TimeGrid grid(0.0, horizon, h, breaks);

  std::vector<Index> starts;
  for (Index x = 0; x < model.size(); ++x)
    if (gamma(x) > 0.0) starts.push_back(x);
  const TransitionTable table = minimal_transition(kernel, 0.0, starts, grid, opts);
  const Index n_nodes = static_cast<Index>(grid.size());
  Matrix P = Matrix::Zero(n_nodes, model.size());
  for (Index x : starts) P += gamma(x) * table.from(x).values;

  // segment boundaries: the grid nodes at the merged breakpoints
  std::vector<std::size_t> cuts{0};
  for (Real b : breaks) cuts.push_back(static_cast<std::size_t>(grid.find(b)));
  cuts.push_back(grid.size() - 1);

  Real value = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const std::size_t a = cuts[s], b = cuts[s + 1];
    if (b <= a) continue;
    const Real mid = 0.5 * (grid[a] + grid[a + 1]);
    Vector cbar(model.size());
    for (Index x = 0; x < model.size(); ++x) cbar(x) = policy.probs(x, mid).dot(cost.running.row(x));
    std::vector<Real> xs, vs;
    for (std::size_t j = a; j <= b; ++j) {
      xs.push_back(grid[j]);
      vs.push_back(std::exp(-cost.alpha.cumulative(grid[j])) * P.row(static_cast<Index>(j)).dot(cbar.transpose()));
    }
    value += integrate_nodes(xs, vs);
  }
  for (const auto& ic : cost.instant) {
    const long j = ic.u == 0.0 ? 0 : (ic.u == horizon ? n_nodes - 1 : grid.find(ic.u));
    Real g = 0.0;
    for (Index x = 0; x < model.size(); ++x)
      g += P(j, x) * policy.probs(x, ic.u).dot(ic.G.row(x));
    value += std::exp(-cost.alpha.cumulative(ic.u)) * g;
  }
  CostValue out;
  out.value = value;
  out.tail_bound = tail_bound(model, cost, c, horizon);
  out.horizon = horizon;
  out.route = "exact";
  return out;
}

}  // namespace mjp
