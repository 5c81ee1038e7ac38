#include "mjp/policy.hpp"

#include <algorithm>
#include <cmath>

namespace mjp {

BinLayout BinLayout::centered(Real delta, Real horizon) {
  if (!(delta > 0.0)) throw ConfigurationError("bin width must be > 0");
  BinLayout b;
  b.edges.push_back(0.0);
  b.reps.push_back(0.0);
  for (long k = 0;; ++k) {
    const Real e = (static_cast<Real>(k) + 0.5) * delta;
    if (!(e < horizon)) break;
    b.edges.push_back(e);
    b.reps.push_back(static_cast<Real>(k + 1) * delta);
  }
  return b;
}

BinLayout BinLayout::uniform(Real delta, Real horizon) {
  if (!(delta > 0.0)) throw ConfigurationError("bin width must be > 0");
  BinLayout b;
  for (long k = 0;; ++k) {
    const Real e = static_cast<Real>(k) * delta;
    if (k > 0 && !(e < horizon)) break;
    b.edges.push_back(e);
    b.reps.push_back(e + 0.5 * delta);
  }
  return b;
}

std::size_t BinLayout::bin_of(Real t) const {
  auto it = std::upper_bound(edges.begin(), edges.end(), t);
  return it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
}

void BinLayout::validate() const {
  if (edges.empty() || edges.front() != 0.0) throw ConfigurationError("bins must start at 0");
  if (reps.size() != edges.size()) throw ConfigurationError("one representative time per bin");
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (!(edges[k] > edges[k - 1])) throw ConfigurationError("bin edges must increase");
}

MarkovPolicy::MarkovPolicy(const MdpModel& model, BinLayout bins,
                           std::vector<Matrix> probs, std::string name)
    : bins_(std::move(bins)), probs_(std::move(probs)), name_(std::move(name)) {
  bins_.validate();
  if (probs_.size() != bins_.size()) throw ConfigurationError("one table per bin");
  for (const auto& m : probs_) {
    if (m.rows() != model.size() || m.cols() != model.n_actions())
      throw ConfigurationError("policy table has wrong shape");
    for (Index x = 0; x < model.size(); ++x) model.check_probs(x, m.row(x));
  }
}

MarkovPolicy MarkovPolicy::stationary(const MdpModel& model, const Matrix& probs,
                                      std::string name) {
  BinLayout b;
  b.edges = {0.0};
  b.reps = {0.0};
  return MarkovPolicy(model, b, {probs}, std::move(name));
}

ActionVector MarkovPolicy::probs(Index x, Real t) const {
  return probs_[bins_.bin_of(t)].row(x);
}

PolicySegment MarkovPolicy::segment(const History& h, Real s) const {
  const Real tn = h.last_time();
  std::size_t k = bins_.bin_of(tn + s);
  while (k + 1 < bins_.size() && bins_.edges[k + 1] - tn <= s) ++k;
  const Real s_end = k + 1 < bins_.size() ? bins_.edges[k + 1] - tn : kInf;
  return {s_end, probs_[k].row(h.current())};
}

DepthPolicy::DepthPolicy(const MdpModel& model, Rule rule, std::string name)
    : model_(&model), rule_(std::move(rule)), name_(std::move(name)) {}

PolicySegment DepthPolicy::segment(const History& h, Real) const {
  return {kInf, rule_(h.current(), h.depth())};
}

SwitchPolicy::SwitchPolicy(const MdpModel& model, Real s_switch)
    : model_(&model), s_switch_(s_switch) {
  if (!(s_switch > 0.0)) throw ConfigurationError("switch time must be > 0");
}

PolicySegment SwitchPolicy::segment(const History& h, Real s) const {
  const Index x = h.current();
  if (s < s_switch_) return {s_switch_, model_->default_probs(x)};
  ActionVector p = ActionVector::Zero(model_->n_actions());
  p(model_->available[static_cast<std::size_t>(x)].back()) = 1.0;
  return {kInf, p};
}

DepthPolicy parity_policy(const MdpModel& model) {
  const MdpModel* m = &model;
  return DepthPolicy(
      model,
      [m](Index x, std::size_t depth) {
        const auto& av = m->available[static_cast<std::size_t>(x)];
        ActionVector p = ActionVector::Zero(m->n_actions());
        p(av[depth % av.size()]) = 1.0;
        return p;
      },
      "parity");
}

DepthPolicy birth_policy(const MdpModel& model) {
  const Index slow = model.action_index("slow");
  const Index fast = model.action_index("fast");
  const MdpModel* m = &model;
  return DepthPolicy(
      model,
      [m, slow, fast](Index x, std::size_t depth) {
        if (!m->is_available(x, slow) || !m->is_available(x, fast)) return m->default_probs(x);
        ActionVector p = ActionVector::Zero(m->n_actions());
        if (depth % 2 == 0) {
          p(fast) = 1.0;
        } else {
          p(fast) = 0.5;
          p(slow) = 0.5;
        }
        return p;
      },
      "birth");
}

MarkovPolicy uniform_policy(const MdpModel& model) {
  Matrix p = Matrix::Zero(model.size(), model.n_actions());
  for (Index x = 0; x < model.size(); ++x) {
    const auto& av = model.available[static_cast<std::size_t>(x)];
    for (Index a : av) p(x, a) = 1.0 / static_cast<Real>(av.size());
  }
  return MarkovPolicy::stationary(model, p, "uniform");
}

MarkovPolicy default_policy(const MdpModel& model) {
  Matrix p = Matrix::Zero(model.size(), model.n_actions());
  for (Index x = 0; x < model.size(); ++x) p(x, model.default_action[static_cast<std::size_t>(x)]) = 1.0;
  return MarkovPolicy::stationary(model, p, "default");
}

std::unique_ptr<Policy> make_policy(const std::string& name, const MdpModel& model) {
  if (name == "parity") return std::make_unique<DepthPolicy>(parity_policy(model));
  if (name == "birth") return std::make_unique<DepthPolicy>(birth_policy(model));
  if (name == "uniform") return std::make_unique<MarkovPolicy>(uniform_policy(model));
  if (name == "default") return std::make_unique<MarkovPolicy>(default_policy(model));
  if (name == "switch") return std::make_unique<SwitchPolicy>(model, 0.5);
  throw ConfigurationError("unknown policy '" + name + "'");
}

RateKernel induced_kernel(const MdpModel& model, const MarkovPolicy& policy) {
  const Index n = model.size();
  std::vector<Matrix> mats;
  for (const auto& table : policy.tables()) {
    Matrix q = Matrix::Zero(n, n);
    for (Index x = 0; x < n; ++x) {
      for (Index a = 0; a < model.n_actions(); ++a) {
        const Real p = table(x, a);
        if (p == 0.0) continue;
        const RowVector& r = model.row(x, a);
        for (Index y = 0; y < n; ++y)
          if (y != x) q(x, y) += p * r(y);
      }
      Real off = 0.0;
      for (Index y = 0; y < n; ++y)
        if (y != x) off += q(x, y);
      q(x, x) = -off;
    }
    mats.push_back(std::move(q));
  }
  RateKernel k = RateKernel::piecewise(model.space, TimeWindow{}, policy.bins().edges, std::move(mats));
  if (model.overflow_rate_sup) k.set_overflow_rate_sup(*model.overflow_rate_sup);
  return k;
}

namespace {

Index sample_controlled_destination(const MdpModel& model, Index x,
                                    const ActionVector& p, Real lam, Rng& rng) {
  Real target = rng.uniform() * lam;
  Index last = -1;
  for (Index a = 0; a < p.size(); ++a) {
    if (p(a) == 0.0) continue;
    const RowVector& r = model.row(x, a);
    for (Index y = 0; y < r.size(); ++y) {
      if (y == x || r(y) <= 0.0) continue;
      const Real w = p(a) * r(y);
      last = y;
      if (target < w) return y;
      target -= w;
    }
  }
  if (last < 0) throw DomainError("no jump target");
  return last;
}

}  // namespace

PathRecord simulate_controlled(const MdpModel& model, const Policy& policy,
                               Index x0, const SimConfig& cfg, Rng& rng) {
  if (x0 < 0 || x0 >= model.size()) throw IndexError("start state out of range");
  PathRecord p;
  p.x0 = x0;
  p.t0 = 0.0;
  History h;
  h.x0 = x0;
  Index x = x0;
  Real t = 0.0;
  while (true) {
    if (p.n_jumps >= cfg.max_jumps) {
      p.status = PathStatus::exploded;
      p.end_time = t;
      p.final_state = x;
      break;
    }
    Real e = rng.exponential();
    Real s = 0.0;
    bool jumped = false;
    while (true) {
      const PolicySegment seg = policy.segment(h, s);
      model.check_probs(x, seg.probs);
      if (!(seg.s_end > s)) throw PolicyError("policy segment does not advance in time");
      const Real a = t + s;
      const Real b = std::min(t + seg.s_end, cfg.horizon);
      const Real lam = model.mixed_exit_rate(x, seg.probs);
      if (lam > 0.0 && lam * (b - a) >= e) {
        Real tj = a + e / lam;
        if (!(tj > t)) tj = std::nextafter(t, kInf);
        p.marks.push_back({a, tj, x, seg.probs});
        const Index y = sample_controlled_destination(model, x, seg.probs, lam, rng);
        p.jumps.push_back({tj, y});
        h.jumps.push_back({tj, y});
        ++p.n_jumps;
        x = y;
        t = tj;
        jumped = true;
        break;
      }
      e -= lam * (b - a);
      if (b > a) p.marks.push_back({a, b, x, seg.probs});
      if (b >= cfg.horizon) break;
      s = seg.s_end;
    }
    if (!jumped) {
      p.status = model.space.is_sink(x) ? PathStatus::absorbed : PathStatus::censored_at_horizon;
      p.end_time = cfg.horizon;
      p.final_state = x;
      break;
    }
  }
  return p;
}

PathRecord simulate_controlled(const MdpModel& model, const Policy& policy,
                               const RowVector& gamma, const SimConfig& cfg, Rng& rng) {
  if (gamma.size() != model.size()) throw ConfigurationError("initial law has wrong size");
  if ((gamma.array() < 0.0).any() || std::abs(gamma.sum() - 1.0) > 1e-12)
    throw ConfigurationError("initial law must be a probability vector");
  return simulate_controlled(model, policy, sample_index(gamma, rng), cfg, rng);
}

namespace {

struct PathList {
  std::vector<PathRecord> paths;
  void merge(PathList& o) {
    for (auto& p : o.paths) paths.push_back(std::move(p));
  }
};

}  // namespace

std::vector<PathRecord> simulate_controlled_paths(const MdpModel& model,
                                                  const Policy& policy,
                                                  const RowVector& gamma,
                                                  const SimConfig& cfg) {
  cfg.validate();
  auto list = run_chunks<PathList>(cfg.replications, [&](std::size_t c, std::size_t b, std::size_t e) {
    PathList l;
    Rng rng(cfg.seed, c);
    for (std::size_t r = b; r < e; ++r) l.paths.push_back(simulate_controlled(model, policy, gamma, cfg, rng));
    return l;
  });
  return std::move(list.paths);
}

const ActionMark* mark_at(const PathRecord& p, Real t) {
  if (p.marks.empty() || t < p.marks.front().t_start) return nullptr;
  auto it = std::upper_bound(p.marks.begin(), p.marks.end(), t,
                             [](Real v, const ActionMark& m) { return v < m.t_start; });
  const ActionMark& m = *(it - 1);
  if (t < m.t_end) return &m;
  if (t == m.t_end && &m == &p.marks.back() && p.status != PathStatus::exploded) return &m;
  return nullptr;
}

}  // namespace mjp
