#include "mjp/simulate.hpp"

#include <cmath>
#include <limits>

namespace mjp {

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

Real Rng::uniform() {
  return (static_cast<Real>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

Real Rng::exponential() { return -std::log(uniform()); }

std::string to_string(PathStatus s) {
  switch (s) {
    case PathStatus::censored_at_horizon: return "censored_at_horizon";
    case PathStatus::absorbed: return "absorbed";
    case PathStatus::exploded: return "exploded";
  }
  return "unknown";
}

Index PathRecord::state_at(Real t) const {
  if (t < t0) throw DomainError("time before path start");
  if (status == PathStatus::exploded && t >= end_time) return -1;
  if (jumps.size() != n_jumps) {
    if (n_jumps == 0) return x0;
    if (t == end_time) return final_state;
    throw ConfigurationError("path was simulated without recorded jumps");
  }
  Index s = x0;
  for (const auto& j : jumps) {
    if (j.t > t) break;
    s = j.x;
  }
  return s;
}

void SimConfig::validate() const {
  if (!(horizon > 0.0)) throw ConfigurationError("horizon must be > 0");
  if (max_jumps == 0) throw ConfigurationError("max_jumps must be > 0");
  if (replications == 0) throw ConfigurationError("replications must be > 0");
}

HoldingTime sample_holding_time(const RateKernel& kernel, Index x, Real u,
                                Real horizon, Rng& rng) {
  if (x < 0 || x >= kernel.size()) throw IndexError("state out of range");
  if (kernel.space().is_sink(x)) throw DomainError("holding time asked for a sink state");
  const Real end = std::min(horizon, kernel.window().t1);
  if (!(u < end)) return {0.0, true};
  if (!kernel.pieces().empty()) {
    const auto& br = kernel.breakpoints();
    const auto& qs = kernel.pieces();
    Real e = rng.exponential();
    Real t = u;
    std::size_t k = kernel.piece_index(u);
    while (t < end) {
      const Real hi = k + 1 < br.size() ? std::min(end, br[k + 1]) : end;
      const Real r = -qs[k](x, x);
      if (r > 0.0 && r * (hi - t) >= e) return {t + e / r - u, false};
      e -= r * (hi - t);
      t = hi;
      ++k;
    }
    return {end - u, true};
  }
  // thinning on sub-windows with a finite majorant
  Real a = u;
  const Real chunk = std::isfinite(end - u) ? (end - u) / 16.0 : 1.0;
  while (a < end) {
    Real b = std::min(end, a + chunk);
    Real m = kernel.majorant(x, a, b);
    while (!std::isfinite(m) && b - a > 1e-15) {
      b = a + 0.5 * (b - a);
      m = kernel.majorant(x, a, b);
    }
    if (!std::isfinite(m)) throw ConfigurationError("majorant is not finite");
    if (m > 0.0) {
      Real t = a;
      while (true) {
        t += rng.exponential() / m;
        if (t >= b) break;
        if (rng.uniform() * m <= kernel.total_rate(x, t)) return {t - u, false};
      }
    }
    a = b;
  }
  return {end - u, true};
}

namespace {

RowVector jump_row(const RateKernel& kernel, Index x, Real t) {
  return kernel.generator_spec()->rates(t).row(x);
}


}  // namespace

Index sample_index(const RowVector& probs, Rng& rng) {
  const Real total = probs.sum();
  Real target = rng.uniform() * total;
  Index last = -1;
  for (Index y = 0; y < probs.size(); ++y) {
    if (probs(y) <= 0.0) continue;
    last = y;
    if (target < probs(y)) return y;
    target -= probs(y);
  }
  if (last < 0) throw DomainError("cannot sample from a zero vector");
  return last;
}

Index sample_destination(const RateKernel& kernel, Index x, Real t, Rng& rng) {
  if (!kernel.pieces().empty()) {
    std::size_t k = kernel.piece_index(t);
    if (k > 0 && kernel.breakpoints()[k] == t) --k;
    const auto& targets = kernel.targets(k, x);
    if (targets.empty()) throw DomainError("no jump target");
    if (targets.size() == 1) return targets.front().y;
    Real target = rng.uniform() * -kernel.pieces()[k](x, x);
    for (const auto& j : targets) {
      if (target < j.rate) return j.y;
      target -= j.rate;
    }
    return targets.back().y;
  }
  RowVector row = jump_row(kernel, x, t);
  row(x) = 0.0;
  return sample_index(row, rng);
}

PathRecord sample_path(const RateKernel& kernel, Index x0, const SimConfig& cfg,
                       Rng& rng) {
  if (x0 < 0 || x0 >= kernel.size()) throw IndexError("start state out of range");
  PathRecord p;
  p.x0 = x0;
  p.t0 = kernel.window().t0;
  Index x = x0;
  Real t = p.t0;
  while (true) {
    if (p.n_jumps >= cfg.max_jumps) {
      p.status = PathStatus::exploded;
      p.end_time = t;
      p.final_state = x;
      break;
    }
    if (!kernel.can_leave(x)) {
      p.status = kernel.space().is_sink(x) ? PathStatus::absorbed : PathStatus::censored_at_horizon;
      p.end_time = cfg.horizon;
      p.final_state = x;
      break;
    }
    const HoldingTime h = sample_holding_time(kernel, x, t, cfg.horizon, rng);
    if (h.censored) {
      p.status = PathStatus::censored_at_horizon;
      p.end_time = cfg.horizon;
      p.final_state = x;
      break;
    }
    Real tn = t + h.tau;
    if (!(tn > t)) tn = std::nextafter(t, kInf);
    const Index y = sample_destination(kernel, x, tn, rng);
    if (cfg.record_jumps) p.jumps.push_back({tn, y});
    ++p.n_jumps;
    x = y;
    t = tn;
  }
  return p;
}

PathRecord sample_path(const RateKernel& kernel, const RowVector& gamma,
                       const SimConfig& cfg, Rng& rng) {
  if (gamma.size() != kernel.size()) throw ConfigurationError("initial law has wrong size");
  if ((gamma.array() < 0.0).any() || std::abs(gamma.sum() - 1.0) > 1e-12)
    throw ConfigurationError("initial law must be a probability vector");
  return sample_path(kernel, sample_index(gamma, rng), cfg, rng);
}

EmpiricalTransition empirical_transition(const std::vector<PathRecord>& paths,
                                         const StateSpace& space, Index x, Real t) {
  EmpiricalTransition e;
  e.start = x;
  const Index n = space.size();
  RowVector counts = RowVector::Zero(n);
  std::size_t lost = 0;
  for (const auto& p : paths) {
    if (p.x0 != x) continue;
    ++e.paths;
    const Index s = p.state_at(t);
    if (s < 0) {
      ++lost;
    } else {
      counts(s) += 1.0;
      if (space.is_sink(s)) ++lost;
    }
  }
  if (e.paths == 0) {
    e.estimate = RowVector::Constant(n, std::numeric_limits<Real>::quiet_NaN());
    e.std_error = e.estimate;
    e.defect = e.defect_se = std::numeric_limits<Real>::quiet_NaN();
    return e;
  }
  const Real m = static_cast<Real>(e.paths);
  e.estimate = counts / m;
  e.std_error = (e.estimate.array() * (1.0 - e.estimate.array()) / m).sqrt();
  e.defect = static_cast<Real>(lost) / m;
  e.defect_se = std::sqrt(e.defect * (1.0 - e.defect) / m);
  return e;
}

namespace {

struct CountAcc {
  RowVector counts;
  std::size_t paths = 0;
  std::size_t lost = 0;
  void merge(const CountAcc& o) {
    counts += o.counts;
    paths += o.paths;
    lost += o.lost;
  }
};

}  // namespace

EmpiricalTransition simulate_transition(const RateKernel& kernel, Index x,
                                        const SimConfig& cfg) {
  cfg.validate();
  SimConfig c = cfg;
  c.record_jumps = false;
  const auto& space = kernel.space();
  auto acc = run_chunks<CountAcc>(cfg.replications, [&](std::size_t chunk, std::size_t b,
                                                        std::size_t e) {
    CountAcc a;
    a.counts = RowVector::Zero(kernel.size());
    Rng rng(cfg.seed, chunk);
    for (std::size_t r = b; r < e; ++r) {
      const PathRecord p = sample_path(kernel, x, c, rng);
      ++a.paths;
      if (p.status == PathStatus::exploded) {
        ++a.lost;
      } else {
        a.counts(p.final_state) += 1.0;
        if (space.is_sink(p.final_state)) ++a.lost;
      }
    }
    return a;
  });
  EmpiricalTransition e;
  e.start = x;
  e.paths = acc.paths;
  const Real m = static_cast<Real>(acc.paths);
  e.estimate = acc.counts / m;
  e.std_error = (e.estimate.array() * (1.0 - e.estimate.array()) / m).sqrt();
  e.defect = static_cast<Real>(acc.lost) / m;
  e.defect_se = std::sqrt(e.defect * (1.0 - e.defect) / m);
  return e;
}

PathSummary summarize(const std::vector<PathRecord>& paths) {
  PathSummary s;
  s.paths = paths.size();
  Real jumps = 0.0, tex = 0.0;
  for (const auto& p : paths) {
    jumps += static_cast<Real>(p.n_jumps);
    switch (p.status) {
      case PathStatus::exploded:
        ++s.exploded;
        tex += p.end_time;
        break;
      case PathStatus::censored_at_horizon: ++s.censored; break;
      case PathStatus::absorbed: ++s.absorbed; break;
    }
  }
  if (s.paths) s.mean_jumps = jumps / static_cast<Real>(s.paths);
  if (s.exploded) s.mean_explosion_time = tex / static_cast<Real>(s.exploded);
  return s;
}

}  // namespace mjp
