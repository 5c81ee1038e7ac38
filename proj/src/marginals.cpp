#include "mjp/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mjp {

std::size_t MarginalTable::time_index(Real t) const {
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return k;
  throw ConfigurationError("time " + std::to_string(t) + " is not in the marginal table");
}

MarginalAccumulator::MarginalAccumulator(std::vector<Real> times, Index n_states,
                                         Index n_actions)
    : times_(std::move(times)) {
  if (!std::is_sorted(times_.begin(), times_.end()))
    throw ConfigurationError("marginal times must be sorted");
  const Index K = static_cast<Index>(times_.size());
  s_ = Matrix::Zero(K, n_states);
  sa_.assign(times_.size(), Matrix::Zero(n_states, n_actions));
  sa2_ = sa_;
}

void MarginalAccumulator::add(const PathRecord& p) {
  ++n_;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    const ActionMark* m = mark_at(p, times_[k]);
    if (!m) continue;
    s_(static_cast<Index>(k), m->x) += 1.0;
    for (Index a = 0; a < m->probs.size(); ++a) {
      const Real v = m->probs(a);
      if (v == 0.0) continue;
      sa_[k](m->x, a) += v;
      sa2_[k](m->x, a) += v * v;
    }
  }
}

void MarginalAccumulator::merge(const MarginalAccumulator& o) {
  n_ += o.n_;
  s_ += o.s_;
  for (std::size_t k = 0; k < sa_.size(); ++k) {
    sa_[k] += o.sa_[k];
    sa2_[k] += o.sa2_[k];
  }
}

MarginalTable MarginalAccumulator::table() const {
  MarginalTable t;
  t.times = times_;
  t.source = "monte_carlo";
  t.paths = n_;
  if (n_ == 0) throw ConfigurationError("no paths");
  const Real n = static_cast<Real>(n_);
  t.state = s_ / n;
  t.state_se = (t.state.array() * (1.0 - t.state.array()) / n).max(0.0).sqrt().matrix();
  for (std::size_t k = 0; k < sa_.size(); ++k) {
    const Matrix mean = sa_[k] / n;
    Matrix var = (sa2_[k] / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
    if (n_ > 1) var *= n / (n - 1.0);
    t.state_action.push_back(mean);
    t.state_action_se.push_back((var / n).cwiseSqrt());
  }
  return t;
}

MarginalTable estimate_marginals(const std::vector<PathRecord>& paths,
                                 std::vector<Real> times, Index n_states,
                                 Index n_actions) {
  MarginalAccumulator acc(std::move(times), n_states, n_actions);
  for (const auto& p : paths) acc.add(p);
  return acc.table();
}

MarginalTable simulate_marginals(const MdpModel& model, const Policy& policy,
                                 const RowVector& gamma, std::vector<Real> times,
                                 const SimConfig& cfg) {
  cfg.validate();
  if (times.empty()) throw ConfigurationError("no marginal times");
  SimConfig c = cfg;
  c.horizon = std::max(cfg.horizon, *std::max_element(times.begin(), times.end()));
  auto acc = run_chunks<MarginalAccumulator>(
      cfg.replications, [&](std::size_t chunk, std::size_t b, std::size_t e) {
        MarginalAccumulator a(times, model.size(), model.n_actions());
        Rng rng(cfg.seed, chunk);
        for (std::size_t r = b; r < e; ++r) a.add(simulate_controlled(model, policy, gamma, c, rng));
        return a;
      });
  return acc.table();
}

DerivedPolicy derive_markov_policy(const MarginalTable& marginals,
                                   const MdpModel& model, const BinLayout& bins) {
  bins.validate();
  std::vector<Matrix> tables;
  std::size_t fallback = 0, renorm = 0;
  std::vector<std::string> log;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const std::size_t tk = marginals.time_index(bins.reps[k]);
    Matrix phi = Matrix::Zero(model.size(), model.n_actions());
    for (Index x = 0; x < model.size(); ++x) {
      const Real d = marginals.state(static_cast<Index>(tk), x);
      if (!(d > 0.0)) {
        phi.row(x) = model.default_probs(x);
        ++fallback;
        continue;
      }
      RowVector r = marginals.state_action[tk].row(x) / d;
      for (Index a = 0; a < model.n_actions(); ++a)
        if (!model.is_available(x, a)) r(a) = 0.0;
      const Real sum = r.sum();
      if (std::abs(sum - 1.0) > 1e-12) {
        ++renorm;
        std::ostringstream os;
        os << "bin " << k << " state " << model.space.labels[x] << ": row sum " << sum
           << " renormalized";
        log.push_back(os.str());
      }
      phi.row(x) = r / sum;
    }
    tables.push_back(std::move(phi));
  }
  if (fallback) log.push_back(std::to_string(fallback) + " (state, bin) pairs used the default action");
  DerivedPolicy d{MarkovPolicy(model, bins, std::move(tables), "derived"), fallback, renorm, log};
  return d;
}

MarginalTable markov_forward_marginals(const MdpModel& model,
                                       const MarkovPolicy& policy,
                                       const RowVector& gamma,
                                       std::vector<Real> times, Real h,
                                       const TransitionOptions& opts) {
  if (times.empty()) throw ConfigurationError("no marginal times");
  if (gamma.size() != model.size()) throw ConfigurationError("initial law has wrong size");
  const RateKernel kernel = induced_kernel(model, policy);
  std::vector<Index> starts;
  for (Index x = 0; x < model.size(); ++x)
    if (gamma(x) > 0.0) starts.push_back(x);
  const Real T = *std::max_element(times.begin(), times.end());
  MarginalTable out;
  out.times = times;
  out.source = "forward_ode";
  const Index K = static_cast<Index>(times.size());
  out.state = Matrix::Zero(K, model.size());
  out.state_se = out.state;
  std::optional<TransitionTable> table;
  if (T > 0.0) table.emplace(minimal_transition(kernel, 0.0, starts, TimeGrid::for_kernel(kernel, 0.0, T, h), opts));
  for (Index k = 0; k < K; ++k) {
    const Real t = times[static_cast<std::size_t>(k)];
    RowVector row = RowVector::Zero(model.size());
    for (Index x : starts) {
      if (t == 0.0) {
        row(x) += gamma(x);
      } else {
        row += gamma(x) * table->row_at(x, t);
      }
    }
    out.state.row(k) = row;
    Matrix sa = Matrix::Zero(model.size(), model.n_actions());
    for (Index x = 0; x < model.size(); ++x) sa.row(x) = row(x) * policy.probs(x, t);
    out.state_action.push_back(sa);
    out.state_action_se.push_back(Matrix::Zero(model.size(), model.n_actions()));
  }
  return out;
}

DerivedWithErrors derive_with_errors(const MdpModel& model, const Policy& pi,
                                     const RowVector& gamma, const BinLayout& bins,
                                     std::vector<Real> times, const SimConfig& cfg,
                                     std::size_t batches, Real h,
                                     const TransitionOptions& opts) {
  if (batches < 2) throw ConfigurationError("need at least 2 batches");
  auto derive = [&](std::uint64_t seed, std::size_t n) {
    SimConfig c = cfg;
    c.seed = seed;
    c.replications = n;
    c.horizon = bins.reps.back();
    return derive_markov_policy(simulate_marginals(model, pi, gamma, bins.reps, c), model, bins);
  };
  DerivedWithErrors out{derive(cfg.seed, cfg.replications), {}, {}};
  out.exact = markov_forward_marginals(model, out.derived.policy, gamma, times, h, opts);
  const std::size_t K = times.size();
  Matrix s1 = Matrix::Zero(out.exact.state.rows(), out.exact.state.cols()), s2 = s1;
  std::vector<Matrix> a1(K, Matrix::Zero(model.size(), model.n_actions())), a2 = a1;
  for (std::size_t b = 0; b < batches; ++b) {
    DerivedPolicy d = derive(cfg.seed + 1 + b, cfg.replications / batches);
    const MarginalTable e = markov_forward_marginals(model, d.policy, gamma, times, h, opts);
    s1 += e.state;
    s2 += e.state.cwiseProduct(e.state);
    for (std::size_t k = 0; k < K; ++k) {
      a1[k] += e.state_action[k];
      a2[k] += e.state_action[k].cwiseProduct(e.state_action[k]);
    }
    out.batches.push_back(std::move(d.policy));
  }
  const Real B = static_cast<Real>(batches);
  auto se = [B](const Matrix& m1, const Matrix& m2) -> Matrix {
    const Matrix mean = m1 / B;
    const Matrix var = ((m2 / B - mean.cwiseProduct(mean)) * (B / (B - 1.0))).cwiseMax(0.0);
    return (var / B).cwiseSqrt();
  };
  out.exact.state_se = se(s1, s2);
  for (std::size_t k = 0; k < K; ++k) out.exact.state_action_se[k] = se(a1[k], a2[k]);
  return out;
}

DominanceReport verify_dominance(const MarginalTable& pi, const MarginalTable& phi,
                                 const StateSpace& space, Real k, Real mass_tol,
                                 Real floor) {
  if (pi.times.size() != phi.times.size())
    throw ConfigurationError("marginal tables have different grids");
  for (std::size_t i = 0; i < pi.times.size(); ++i)
    if (std::abs(pi.times[i] - phi.times[i]) > 1e-12)
      throw ConfigurationError("marginal tables have different grids");
  if (pi.state.cols() != phi.state.cols() || pi.state.cols() != space.size())
    throw ConfigurationError("marginal tables have different state sets");
  DominanceReport rep;
  const auto real = space.real_states();
  for (std::size_t i = 0; i < pi.times.size(); ++i) {
    const Index ki = static_cast<Index>(i);
    Real mass = 0.0;
    for (Index x : real) mass += phi.state(ki, x);
    const bool full = mass >= 1.0 - mass_tol;
    if (full) rep.full_mass_times.push_back(pi.times[i]);
    auto check = [&](Index x, Index a, Real p, Real sp, Real f, Real sf) {
      DominanceEntry e{pi.times[i], x, a, p, f, std::sqrt(sp * sp + sf * sf) + floor,
                       false, full, true};
      e.dominated = e.phi <= e.pi + k * e.se;
      if (full) e.equal = std::abs(e.phi - e.pi) <= k * e.se;
      if (!e.dominated) ++rep.dominance_violations;
      if (!e.equal) ++rep.equality_violations;
      rep.max_z = std::max(rep.max_z, std::abs(e.phi - e.pi) / e.se);
      rep.entries.push_back(e);
    };
    for (Index x : real) {
      check(x, -1, pi.state(ki, x), pi.state_se(ki, x), phi.state(ki, x), phi.state_se(ki, x));
      for (Index a = 0; a < pi.state_action[i].cols(); ++a)
        check(x, a, pi.state_action[i](x, a), pi.state_action_se[i](x, a),
              phi.state_action[i](x, a), phi.state_action_se[i](x, a));
    }
  }
  return rep;
}

namespace {

struct GkeAcc {
  std::size_t n = 0;
  Vector dz, dz2, di, flow;
  explicit GkeAcc(Index k = 0) : dz(Vector::Zero(k)), dz2(Vector::Zero(k)), di(Vector::Zero(k)), flow(Vector::Zero(k)) {}
  void merge(const GkeAcc& o) {
    n += o.n;
    dz += o.dz;
    dz2 += o.dz2;
    di += o.di;
    flow += o.flow;
  }
};

}  // namespace

GkeReport gke_residual(const MdpModel& model, const Policy& policy, Index x,
                       std::span<const Index> set, const std::vector<Real>& times,
                       const SimConfig& cfg) {
  cfg.validate();
  if (times.size() < 2 || !std::is_sorted(times.begin(), times.end()))
    throw ConfigurationError("need at least two increasing times");
  std::vector<bool> in_b(static_cast<std::size_t>(model.size()), false);
  for (Index z : set) {
    if (z < 0 || z >= model.size()) throw IndexError("state out of range");
    if (model.space.overflow && z == *model.space.overflow &&
        (!model.overflow_rate_sup || !std::isfinite(*model.overflow_rate_sup)))
      throw GuardError(model.space.labels[z],
                       "generalized forward identity undefined on B: controlled exit rate of '" +
                           model.space.labels[z] + "' is unbounded");
    in_b[static_cast<std::size_t>(z)] = true;
  }
  // net rate into B of (y, a)
  Matrix r = Matrix::Zero(model.size(), model.n_actions());
  for (Index y = 0; y < model.size(); ++y)
    for (Index a : model.available[static_cast<std::size_t>(y)]) {
      const RowVector& row = model.row(y, a);
      Real v = 0.0;
      for (Index z = 0; z < model.size(); ++z) {
        if (z == y) continue;
        if (in_b[y] && !in_b[z]) v -= row(z);
        if (!in_b[y] && in_b[z]) v += row(z);
      }
      r(y, a) = v;
    }
  const Index K = static_cast<Index>(times.size()) - 1;
  SimConfig c = cfg;
  c.horizon = times.back();
  auto indicator = [&](const PathRecord& p, Real t) {
    const ActionMark* m = mark_at(p, t);
    return m && in_b[static_cast<std::size_t>(m->x)] ? 1.0 : 0.0;
  };
  auto acc = run_chunks<GkeAcc>(cfg.replications, [&](std::size_t chunk, std::size_t b, std::size_t e) {
    GkeAcc a(K);
    Rng rng(cfg.seed, chunk);
    for (std::size_t rep = b; rep < e; ++rep) {
      const PathRecord p = simulate_controlled(model, policy, x, c, rng);
      ++a.n;
      for (Index k = 0; k < K; ++k) {
        const Real t0 = times[static_cast<std::size_t>(k)], t1 = times[static_cast<std::size_t>(k) + 1];
        Real f = 0.0;
        for (const auto& m : p.marks) {
          const Real lo = std::max(t0, m.t_start), hi = std::min(t1, m.t_end);
          if (hi <= lo) continue;
          Real rate = 0.0;
          for (Index ac = 0; ac < m.probs.size(); ++ac)
            if (m.probs(ac) != 0.0) rate += m.probs(ac) * r(m.x, ac);
          f += rate * (hi - lo);
        }
        const Real di = indicator(p, t1) - indicator(p, t0);
        const Real z = di - f;
        a.dz(k) += z;
        a.dz2(k) += z * z;
        a.di(k) += di;
        a.flow(k) += f;
      }
    }
    return a;
  });
  GkeReport rep;
  const Real n = static_cast<Real>(acc.n);
  for (Index k = 0; k < K; ++k) {
    GkeInterval iv;
    iv.t0 = times[static_cast<std::size_t>(k)];
    iv.t1 = times[static_cast<std::size_t>(k) + 1];
    iv.mass_change = acc.di(k) / n;
    iv.net_flow = acc.flow(k) / n;
    iv.residual = acc.dz(k) / n;
    const Real var = std::max(0.0, acc.dz2(k) / n - iv.residual * iv.residual) * n / std::max(1.0, n - 1.0);
    iv.se = std::sqrt(var / n);
    rep.max_z = std::max(rep.max_z, iv.se > 0.0 ? std::abs(iv.residual) / iv.se
                                                : (iv.residual == 0.0 ? 0.0 : kInf));
    rep.intervals.push_back(iv);
  }
  return rep;
}

}  // namespace mjp
