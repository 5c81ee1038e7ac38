#include "mjp/expansion.hpp"

#include <algorithm>
#include <cmath>

namespace mjp {

ExpandedModel expand_with_initial_state(const MdpModel& model,
                                        const RowVector& gamma, Real u) {
  if (!(u > 0.0) || !std::isfinite(u)) throw DomainError("expansion time u must be > 0");
  model.validate();
  if (model.space.cemetery)
    throw ConfigurationError("expansion of a model with a cemetery state is not supported");
  if (gamma.size() != model.size() || (gamma.array() < 0.0).any() ||
      std::abs(gamma.sum() - 1.0) > 1e-12)
    throw ConfigurationError("gamma must be a probability vector over the model states");
  if (model.n_actions() + 2 > kMaxActions) throw ConfigurationError("too many actions to expand");

  ExpandedModel ex;
  const Index n = model.size();
  const Index na = model.n_actions();
  ex.original_states = n;
  ex.original_actions = na;
  ex.u = u;
  ex.stay_probability = std::exp(-u);

  MdpModel& m = ex.model;
  m.space = model.space;
  std::string label = "x'";
  while (std::find(m.space.labels.begin(), m.space.labels.end(), label) != m.space.labels.end())
    label += "'";
  m.space.labels.push_back(label);
  ex.x_prime = n;
  m.actions = model.actions;
  std::string a1 = "a'";
  while (std::find(m.actions.begin(), m.actions.end(), a1) != m.actions.end()) a1 += "'";
  std::string a2 = a1 + "'";
  while (std::find(m.actions.begin(), m.actions.end(), a2) != m.actions.end()) a2 += "'";
  m.actions.push_back(a1);
  m.actions.push_back(a2);
  ex.a_prime = na;
  ex.a_dprime = na + 1;
  m.overflow_rate_sup = model.overflow_rate_sup;

  m.available.resize(static_cast<std::size_t>(n + 1));
  m.default_action.resize(static_cast<std::size_t>(n + 1));
  m.rates.assign(static_cast<std::size_t>(n + 1), std::vector<RowVector>(static_cast<std::size_t>(na + 2)));
  for (Index x = 0; x < n; ++x) {
    const auto sx = static_cast<std::size_t>(x);
    m.available[sx] = model.available[sx];
    m.available[sx].push_back(ex.a_dprime);
    m.default_action[sx] = model.default_action[sx];
    for (Index a : model.available[sx]) {
      RowVector r = RowVector::Zero(n + 1);
      r.head(n) = model.row(x, a);
      m.rates[sx][static_cast<std::size_t>(a)] = r;
    }
    m.rates[sx][static_cast<std::size_t>(ex.a_dprime)] = RowVector::Zero(n + 1);
  }
  const auto sp = static_cast<std::size_t>(n);
  m.available[sp] = {ex.a_prime, ex.a_dprime};
  m.default_action[sp] = ex.a_prime;
  RowVector jump = RowVector::Zero(n + 1);
  jump.head(n) = gamma;
  jump(n) = -1.0;
  m.rates[sp][static_cast<std::size_t>(ex.a_prime)] = jump;
  m.rates[sp][static_cast<std::size_t>(ex.a_dprime)] = RowVector::Zero(n + 1);
  m.finalize();

  ex.gamma = RowVector::Zero(n + 1);
  ex.gamma(n) = 1.0;
  return ex;
}

LiftedPolicy::LiftedPolicy(const ExpandedModel& expanded, const Policy& base)
    : ex_(&expanded), base_(&base) {}

ActionVector LiftedPolicy::unit(Index a) const {
  ActionVector p = ActionVector::Zero(ex_->model.n_actions());
  p(a) = 1.0;
  return p;
}

ActionVector LiftedPolicy::widen(const ActionVector& p) const {
  ActionVector w = ActionVector::Zero(ex_->model.n_actions());
  w.head(p.size()) = p;
  return w;
}

PolicySegment LiftedPolicy::segment(const History& h, Real s) const {
  const Real u = ex_->u;
  if (h.depth() == 0) {
    if (h.x0 != ex_->x_prime) {
      // started at a real state: frozen until u, then the original rule
      if (h.t0 + s < u) return {u - h.t0, unit(ex_->a_dprime)};
      History b;
      b.x0 = h.x0;
      const PolicySegment seg = base_->segment(b, h.t0 + s - u);
      return {seg.s_end + (u - h.t0), widen(seg.probs)};
    }
    if (s < u) return {u, unit(ex_->a_prime)};
    return {kInf, unit(ex_->a_dprime)};
  }
  if (h.x0 != ex_->x_prime) throw PolicyError("lifted policy: history must start at x'");
  const Real t1 = h.jumps.front().t;
  History b;
  b.x0 = h.jumps.front().x;
  if (h.depth() == 1) {
    if (t1 + s < u) return {u - t1, unit(ex_->a_dprime)};
    const PolicySegment seg = base_->segment(b, t1 + s - u);
    return {seg.s_end + (u - t1), widen(seg.probs)};
  }
  for (std::size_t i = 1; i < h.jumps.size(); ++i) {
    if (h.jumps[i].t < u) throw PolicyError("lifted policy: jump before u at a real state");
    b.jumps.push_back({h.jumps[i].t - u, h.jumps[i].x});
  }
  const PolicySegment seg = base_->segment(b, s);
  return {seg.s_end, widen(seg.probs)};
}

}  // namespace mjp
