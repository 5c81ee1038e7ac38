#include "mjp/mdp.hpp"

#include <algorithm>
#include <cmath>

namespace mjp {

Index MdpModel::action_index(const std::string& label) const {
  auto it = std::find(actions.begin(), actions.end(), label);
  if (it == actions.end()) throw IndexError("unknown action '" + label + "'");
  return static_cast<Index>(it - actions.begin());
}

bool MdpModel::is_available(Index x, Index a) const {
  const auto& av = available[static_cast<std::size_t>(x)];
  return std::find(av.begin(), av.end(), a) != av.end();
}

const RowVector& MdpModel::row(Index x, Index a) const {
  if (x < 0 || x >= size()) throw IndexError("state out of range");
  if (a < 0 || a >= n_actions()) throw IndexError("action out of range");
  const auto& r = rates[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)];
  if (r.size() == 0)
    throw PolicyError("action '" + actions[a] + "' not available in state '" +
                      space.labels[x] + "'");
  return r;
}

Real MdpModel::qbar(Index x) const {
  Real q = 0.0;
  for (Index a : available[static_cast<std::size_t>(x)]) q = std::max(q, exit_rate(x, a));
  return q;
}

RowVector MdpModel::mixed_row(Index x, const ActionVector& p) const {
  RowVector r = RowVector::Zero(size());
  for (Index a = 0; a < p.size(); ++a)
    if (p(a) != 0.0) r += p(a) * row(x, a);
  return r;
}

Real MdpModel::mixed_exit_rate(Index x, const ActionVector& p) const {
  Real q = 0.0;
  for (Index a = 0; a < p.size(); ++a)
    if (p(a) != 0.0) q += p(a) * exit_rate(x, a);
  return q;
}

ActionVector MdpModel::default_probs(Index x) const {
  ActionVector p = ActionVector::Zero(n_actions());
  p(default_action[static_cast<std::size_t>(x)]) = 1.0;
  return p;
}

void MdpModel::check_probs(Index x, const ActionVector& p) const {
  if (p.size() != n_actions()) throw PolicyError("action vector has wrong size");
  Real sum = 0.0;
  for (Index a = 0; a < p.size(); ++a) {
    if (!(p(a) >= 0.0)) throw PolicyError("negative action probability");
    if (p(a) > 0.0 && !is_available(x, a))
      throw PolicyError("policy puts mass on action '" + actions[a] +
                        "' outside A(" + space.labels[x] + ")");
    sum += p(a);
  }
  if (std::abs(sum - 1.0) > 1e-12) throw PolicyError("action probabilities do not sum to 1");
}

void MdpModel::finalize() {
  for (Index x = 0; x < size(); ++x)
    for (auto& r : rates[static_cast<std::size_t>(x)]) {
      if (r.size() == 0) continue;
      r(x) = 0.0;
      r(x) = -r.sum();
    }
  validate();
}

void MdpModel::validate() const {
  space.validate();
  const Index n = size();
  if (actions.empty()) throw ValidationError("no actions");
  if (n_actions() > kMaxActions) throw ValidationError("too many actions");
  for (std::size_t i = 0; i < actions.size(); ++i)
    for (std::size_t j = i + 1; j < actions.size(); ++j)
      if (actions[i] == actions[j]) throw ValidationError("duplicate action '" + actions[i] + "'");
  if (static_cast<Index>(available.size()) != n ||
      static_cast<Index>(default_action.size()) != n ||
      static_cast<Index>(rates.size()) != n)
    throw ValidationError("per-state tables have wrong size");
  for (Index x = 0; x < n; ++x) {
    const auto& av = available[static_cast<std::size_t>(x)];
    const auto& lbl = space.labels[x];
    if (av.empty()) throw ValidationError("A(" + lbl + ") is empty");
    if (!is_available(x, default_action[static_cast<std::size_t>(x)]))
      throw ValidationError("default action of '" + lbl + "' is not available");
    const auto& rx = rates[static_cast<std::size_t>(x)];
    if (static_cast<Index>(rx.size()) != n_actions())
      throw ValidationError("rate table of '" + lbl + "' has wrong size");
    for (Index a = 0; a < n_actions(); ++a) {
      const auto& r = rx[static_cast<std::size_t>(a)];
      const bool av_a = is_available(x, a);
      if (!av_a) {
        if (r.size() != 0)
          throw ValidationError("rates given for unavailable action (" + lbl + "," + actions[a] + ")");
        continue;
      }
      if (r.size() != n) throw ValidationError("rate row (" + lbl + "," + actions[a] + ") has wrong size");
      Real off = 0.0;
      for (Index y = 0; y < n; ++y) {
        if (y == x) continue;
        if (!(r(y) >= 0.0) || !std::isfinite(r(y)))
          throw ValidationError("rate (" + lbl + "," + actions[a] + ") -> " + space.labels[y] +
                                " must be finite and >= 0");
        off += r(y);
      }
      if (std::abs(off + r(x)) > RateKernel::kRowSumTolerance * std::max(1.0, off))
        throw ValidationError("rate row (" + lbl + "," + actions[a] + ") is not conservative");
      if (space.is_sink(x) && off != 0.0)
        throw ValidationError("sink state '" + lbl + "' must be absorbing");
    }
  }
}

namespace {

MdpModel empty_model(StateSpace space, std::vector<std::string> actions) {
  MdpModel m;
  m.space = std::move(space);
  m.actions = std::move(actions);
  const auto n = static_cast<std::size_t>(m.space.size());
  m.available.resize(n);
  m.default_action.assign(n, 0);
  m.rates.assign(n, std::vector<RowVector>(m.actions.size()));
  return m;
}

void set_rate(MdpModel& m, Index x, Index a, Index y, Real r) {
  auto& row = m.rates[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)];
  if (row.size() == 0) row = RowVector::Zero(m.size());
  row(y) = r;
}

}  // namespace

MdpModel bench3() {
  StateSpace s;
  s.labels = {"0", "1", "2"};
  MdpModel m = empty_model(s, {"slow", "fast"});
  for (Index x = 0; x < 3; ++x) m.available[x] = {0, 1};
  set_rate(m, 0, 0, 1, 1.0);
  set_rate(m, 1, 0, 2, 1.0);
  set_rate(m, 2, 0, 0, 1.0);
  set_rate(m, 0, 1, 2, 2.0);
  set_rate(m, 0, 1, 1, 1.0);
  set_rate(m, 1, 1, 0, 2.0);
  set_rate(m, 2, 1, 1, 1.5);
  set_rate(m, 2, 1, 0, 0.5);
  m.finalize();
  return m;
}

RowVector bench3_gamma() {
  RowVector g(3);
  g << 0.5, 0.3, 0.2;
  return g;
}

MdpModel controlled_birth(int N) {
  if (N < 2) throw ConfigurationError("controlled birth needs N >= 2");
  StateSpace s;
  for (int n = 0; n < N; ++n) s.labels.push_back(std::to_string(n));
  s.labels.push_back("overflow");
  s.overflow = N;
  MdpModel m = empty_model(s, {"slow", "fast"});
  for (Index x = 0; x < N; ++x) {
    m.available[x] = {0, 1};
    set_rate(m, x, 0, x + 1, 1.0);
    set_rate(m, x, 1, x + 1, std::ldexp(1.0, static_cast<int>(x)));
  }
  m.available[N] = {0};
  set_rate(m, N, 0, N, 0.0);
  for (Index x = 0; x < N; ++x) m.default_action[x] = 1;
  m.overflow_rate_sup = kInf;
  m.finalize();
  return m;
}

RowVector controlled_birth_gamma(int N) {
  RowVector g = RowVector::Zero(N + 1);
  g(0) = 0.5;
  g(1) = 0.5;
  return g;
}

DiscountRate DiscountRate::constant(Real alpha) {
  DiscountRate d;
  d.values = {alpha};
  return d;
}

void DiscountRate::validate() const {
  if (breaks.empty() || breaks.size() != values.size() || breaks.front() != 0.0)
    throw ValidationError("discount rate needs breaks starting at 0, one value each");
  for (std::size_t k = 1; k < breaks.size(); ++k)
    if (!(breaks[k] > breaks[k - 1])) throw ValidationError("discount breaks must increase");
  for (Real v : values)
    if (!std::isfinite(v)) throw ValidationError("discount rate must be finite");
}

Real DiscountRate::rate_at(Real t) const {
  auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
  const std::size_t k = it == breaks.begin() ? 0 : static_cast<std::size_t>(it - breaks.begin()) - 1;
  return values[k];
}

Real DiscountRate::cumulative(Real t) const {
  Real a = 0.0;
  for (std::size_t k = 0; k < breaks.size() && breaks[k] < t; ++k) {
    const Real hi = k + 1 < breaks.size() ? std::min(t, breaks[k + 1]) : t;
    a += values[k] * (hi - breaks[k]);
  }
  return a;
}

Real DiscountRate::discounted_length(Real a, Real b) const {
  if (b <= a) return 0.0;
  Real total = 0.0;
  Real lo = a;
  while (lo < b) {
    auto it = std::upper_bound(breaks.begin(), breaks.end(), lo);
    const std::size_t k = static_cast<std::size_t>(it - breaks.begin()) - 1;
    const Real hi = k + 1 < breaks.size() ? std::min(b, breaks[k + 1]) : b;
    const Real r = values[k];
    const Real e = std::exp(-cumulative(lo));
    total += r == 0.0 ? e * (hi - lo) : e * -std::expm1(-r * (hi - lo)) / r;
    lo = hi;
  }
  return total;
}

CostModel CostModel::constant_running(const MdpModel& model, Real c, Real alpha) {
  CostModel m;
  m.running = Matrix::Constant(model.size(), model.n_actions(), c);
  m.alpha = DiscountRate::constant(alpha);
  return m;
}

void CostModel::validate(const MdpModel& model) const {
  if (running.rows() != model.size() || running.cols() != model.n_actions())
    throw ValidationError("running cost has wrong shape");
  if ((running.array() < 0.0).any()) throw ValidationError("running cost must be >= 0");
  alpha.validate();
  for (const auto& ic : instant) {
    if (ic.G.rows() != model.size() || ic.G.cols() != model.n_actions())
      throw ValidationError("instant cost has wrong shape");
    if ((ic.G.array() < 0.0).any()) throw ValidationError("instant cost must be >= 0");
    if (!(ic.u >= 0.0)) throw ValidationError("instant cost time must be >= 0");
  }
  if (jump) {
    if (jump->rows() != model.size() || jump->cols() != model.size())
      throw ValidationError("jump cost has wrong shape");
    if ((jump->array() < 0.0).any()) throw ValidationError("jump cost must be >= 0");
  }
}

}  // namespace mjp
