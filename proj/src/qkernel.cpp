#include "mjp/qkernel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

namespace mjp {

Index StateSpace::index_of(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw IndexError("unknown state '" + label + "'");
  return static_cast<Index>(it - labels.begin());
}

bool StateSpace::is_sink(Index x) const {
  return (cemetery && *cemetery == x) || (overflow && *overflow == x);
}

std::vector<Index> StateSpace::real_states() const {
  std::vector<Index> out;
  for (Index x = 0; x < size(); ++x)
    if (!is_sink(x)) out.push_back(x);
  return out;
}

void StateSpace::validate() const {
  if (labels.empty()) throw ValidationError("state space is empty");
  std::set<std::string> seen;
  for (const auto& l : labels)
    if (!seen.insert(l).second)
      throw ValidationError("duplicate state label '" + l + "'");
  if (cemetery && *cemetery != size() - 1)
    throw ValidationError("cemetery state must be the last state");
  for (auto idx : {cemetery, overflow})
    if (idx && (*idx < 0 || *idx >= size()))
      throw ValidationError("sink index out of range");
}

namespace {

std::string fmt_real(Real v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void RateKernel::validate_matrix(Matrix& q, const std::string& where) {
  const Index n = size();
  if (q.rows() != n || q.cols() != n)
    throw ValidationError(where + ": rate matrix must be " + std::to_string(n) +
                          "x" + std::to_string(n));
  for (Index x = 0; x < n; ++x) {
    Real off = 0.0;
    for (Index y = 0; y < n; ++y) {
      if (y == x) continue;
      const Real r = q(x, y);
      if (!std::isfinite(r) || r < 0.0)
        throw ValidationError(where + ": rate " + space_.labels[x] + "->" +
                              space_.labels[y] + " must be finite and >= 0");
      off += r;
    }
    if (space_.is_sink(x) && (off != 0.0 || q(x, x) != 0.0))
      throw ValidationError(where + ": sink state '" + space_.labels[x] +
                            "' must have exit rate 0");
    const Real sum = off + q(x, x);
    const Real err = std::abs(sum);
    if (err <= kRowSumTolerance) continue;
    if (err <= kRepairTolerance) {
      repairs_.push_back(where + ": row '" + space_.labels[x] +
                         "' sum " + fmt_real(sum) + " repaired");
      q(x, x) = -off;
      continue;
    }
    throw ValidationError(where + ": row '" + space_.labels[x] +
                          "' sums to " + fmt_real(sum) + " (not conservative)");
  }
}

void RateKernel::build_support() {
  const Index n = size();
  support_.setConstant(n, n, false);
  auto mark = [&](const Matrix& q) {
    for (Index x = 0; x < n; ++x)
      for (Index y = 0; y < n; ++y)
        if (x != y && q(x, y) > 0.0) support_(x, y) = true;
  };
  auto finish = [&] {
    leaves_.assign(static_cast<std::size_t>(n), false);
    for (Index x = 0; x < n; ++x) leaves_[x] = !space_.is_sink(x) && support_.row(x).any();
  };
  if (!mats_.empty()) {
    for (const auto& m : mats_) {
      mark(m);
      std::vector<std::vector<JumpTarget>> lists(static_cast<std::size_t>(n));
      for (Index x = 0; x < n; ++x)
        for (Index y = 0; y < n; ++y)
          if (x != y && m(x, y) > 0.0) lists[x].push_back({y, m(x, y)});
      targets_.push_back(std::move(lists));
    }
    finish();
    return;
  }
  // Time-varying closed form: sample the window.
  const Real t0 = window_.t0;
  const Real t1 = std::isfinite(window_.t1) ? window_.t1 : t0 + 1000.0;
  constexpr int samples = 257;
  for (int k = 0; k < samples; ++k) {
    const Real t = t0 + (t1 - t0) * k / samples;
    mark(spec_->rates(t));
  }
  finish();
}

RateKernel RateKernel::constant(StateSpace space, TimeWindow window,
                                Matrix rates) {
  return piecewise(std::move(space), window, {window.t0}, {std::move(rates)});
}

RateKernel RateKernel::piecewise(StateSpace space, TimeWindow window,
                                 std::vector<Real> breakpoints,
                                 std::vector<Matrix> rates) {
  space.validate();
  if (!(window.t0 < window.t1))
    throw ValidationError("time window requires t0 < t1");
  if (breakpoints.empty() || breakpoints.size() != rates.size())
    throw ValidationError("piecewise kernel needs one matrix per breakpoint");
  if (breakpoints.front() != window.t0)
    throw ValidationError("first breakpoint must equal t0");
  for (std::size_t k = 1; k < breakpoints.size(); ++k)
    if (!(breakpoints[k] > breakpoints[k - 1]) ||
        !(breakpoints[k] < window.t1))
      throw ValidationError("breakpoints must be increasing inside the window");
  RateKernel k;
  k.space_ = std::move(space);
  k.window_ = window;
  k.representation_ = breakpoints.size() == 1 ? Representation::constant
                                              : Representation::piecewise;
  k.breaks_ = std::move(breakpoints);
  k.mats_ = std::move(rates);
  for (std::size_t i = 0; i < k.mats_.size(); ++i)
    k.validate_matrix(k.mats_[i], "piece " + std::to_string(i));
  k.build_support();
  return k;
}

RateKernel RateKernel::generator(StateSpace space, TimeWindow window,
                                 GeneratorSpec spec) {
  space.validate();
  if (!(window.t0 < window.t1))
    throw ValidationError("time window requires t0 < t1");
  if (!spec.rates) throw ValidationError("generator has no rate function");
  RateKernel k;
  k.space_ = std::move(space);
  k.window_ = window;
  k.representation_ = Representation::generator;
  if (spec.homogeneous) {
    k.breaks_ = {window.t0};
    k.mats_ = {spec.rates(window.t0)};
    k.validate_matrix(k.mats_[0], spec.name);
  } else {
    const Real t1 = std::isfinite(window.t1) ? window.t1 : window.t0 + 1000.0;
    for (int i = 0; i < 16; ++i) {
      Matrix q = spec.rates(window.t0 + (t1 - window.t0) * i / 16.0);
      k.validate_matrix(q, spec.name);
    }
  }
  k.spec_ = std::move(spec);
  k.build_support();
  return k;
}

bool RateKernel::time_homogeneous() const { return mats_.size() == 1; }

void RateKernel::check_time(Real t) const {
  if (!window_.contains(t))
    throw DomainError("time " + fmt_real(t) + " outside window [" +
                      fmt_real(window_.t0) + ", " + fmt_real(window_.t1) + ")");
}

void RateKernel::check_index(Index x) const {
  if (x < 0 || x >= size())
    throw IndexError("state index " + std::to_string(x) + " out of range");
}

std::size_t RateKernel::piece_index(Real t) const {
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  return it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
}

Matrix RateKernel::matrix_at(Real t) const {
  check_time(t);
  if (!mats_.empty()) return mats_[piece_index(t)];
  return spec_->rates(t);
}

Matrix RateKernel::matrix_left(Real t) const {
  if (!(t > window_.t0) || t > window_.t1)
    throw DomainError("left limit requires t in (t0, t1]");
  if (!mats_.empty()) {
    auto it = std::lower_bound(breaks_.begin(), breaks_.end(), t);
    return mats_[static_cast<std::size_t>(it - breaks_.begin()) - 1];
  }
  return spec_->rates(t);
}

std::vector<Real> RateKernel::breakpoints_in(Real a, Real b) const {
  std::vector<Real> out;
  for (Real bp : breaks_)
    if (bp > a && bp < b) out.push_back(bp);
  return out;
}

Real RateKernel::total_rate(Index x, Real t) const {
  check_index(x);
  check_time(t);
  if (space_.is_sink(x)) return 0.0;
  if (!mats_.empty()) return -mats_[piece_index(t)](x, x);
  return -spec_->rates(t)(x, x);
}

Real RateKernel::jump_measure(Index x, Real t,
                              std::span<const Index> targets) const {
  check_index(x);
  check_time(t);
  const Matrix q = mats_.empty() ? spec_->rates(t) : mats_[piece_index(t)];
  Real sum = 0.0;
  for (Index y : targets) {
    check_index(y);
    if (y != x) sum += q(x, y);
  }
  return sum;
}

Real RateKernel::hazard(Index x, Real a, Real b, int steps) const {
  check_index(x);
  if (b < a) throw DomainError("hazard requires a <= b");
  if (a < window_.t0 || b > window_.t1)
    throw DomainError("hazard interval outside window");
  if (b == a || space_.is_sink(x)) return 0.0;
  if (!mats_.empty()) {
    Real h = 0.0;
    std::size_t k = piece_index(a);
    Real lo = a;
    while (lo < b) {
      const Real hi = k + 1 < breaks_.size() ? std::min(b, breaks_[k + 1]) : b;
      h += -mats_[k](x, x) * (hi - lo);
      lo = hi;
      ++k;
    }
    return h;
  }
  const Real dt = (b - a) / steps;
  Real h = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const Real t = std::min(a + i * dt, std::nextafter(window_.t1, window_.t0));
    const Real w = (i == 0 || i == steps) ? 0.5 : 1.0;
    h += w * -spec_->rates(t)(x, x);
  }
  return h * dt;
}

Real RateKernel::majorant(Index x, Real a, Real b) const {
  check_index(x);
  if (space_.is_sink(x)) return 0.0;
  if (!mats_.empty()) {
    Real m = 0.0;
    for (std::size_t k = piece_index(a); k < mats_.size(); ++k) {
      if (breaks_[k] >= b && k != piece_index(a)) break;
      m = std::max(m, -mats_[k](x, x));
    }
    return m;
  }
  if (!spec_->majorant)
    throw ConfigurationError("generator '" + spec_->name +
                             "' declares no majorant for thinning");
  return spec_->majorant(x, a, b);
}

RateKernel make_conservative(StateSpace space, TimeWindow window,
                             std::vector<Real> breakpoints,
                             std::vector<Matrix> rates) {
  const Index n = space.size();
  const bool add_state = !space.cemetery.has_value();
  const Index sink = add_state ? n : *space.cemetery;
  StateSpace out = space;
  if (add_state) {
    std::string label = "x'";
    while (std::find(out.labels.begin(), out.labels.end(), label) !=
           out.labels.end())
      label += "'";
    out.labels.push_back(label);
    out.cemetery = n;
  }
  const Index m = out.size();
  std::vector<Matrix> conservative;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    const Matrix& q = rates[k];
    if (q.rows() != n || q.cols() != n)
      throw ValidationError("rate matrix has wrong shape");
    Matrix r = Matrix::Zero(m, m);
    r.topLeftCorner(n, n) = q;
    for (Index x = 0; x < n; ++x) {
      if (x == sink) continue;
      Real off = 0.0;
      for (Index y = 0; y < n; ++y) {
        if (y == x) continue;
        if (q(x, y) < 0.0)
          throw ValidationError("negative off-diagonal rate");
        off += q(x, y);
      }
      const Real sum = off + q(x, x);
      if (sum > RateKernel::kRowSumTolerance)
        throw ValidationError("row '" + space.labels[x] +
                              "' has positive row sum");
      if (sum < 0.0) r(x, sink) += -sum;
    }
    conservative.push_back(std::move(r));
  }
  return RateKernel::piecewise(std::move(out), window, std::move(breakpoints),
                               std::move(conservative));
}

RateKernel make_conservative(StateSpace space, TimeWindow window, Matrix rates) {
  const Real t0 = window.t0;
  return make_conservative(std::move(space), window, {t0}, {std::move(rates)});
}

AssumptionReport check_assumptions(const RateKernel& kernel) {
  AssumptionReport rep;
  const Index n = kernel.size();
  const auto& space = kernel.space();
  rep.qbar = Vector::Zero(n);
  rep.window_integrable.assign(static_cast<std::size_t>(n), true);
  const TimeWindow w = kernel.window();
  const GeneratorSpec* spec = kernel.generator_spec();

  bool locally_bounded = true;
  bool locally_integrable = true;
  if (!kernel.pieces().empty()) {
    rep.qbar_method = spec ? "analytic" : "exact";
    for (const auto& q : kernel.pieces())
      for (Index x = 0; x < n; ++x) rep.qbar(x) = std::max(rep.qbar(x), -q(x, x));
    if (!std::isfinite(w.t1)) {
      for (Index x = 0; x < n; ++x)
        rep.window_integrable[x] = -kernel.pieces().back()(x, x) == 0.0;
    }
  } else if (spec->qbar) {
    rep.qbar_method = "analytic";
    rep.qbar = *spec->qbar;
    locally_bounded = spec->locally_bounded;
    locally_integrable = spec->locally_bounded;
    if (spec->window_integral)
      for (Index x = 0; x < n; ++x)
        rep.window_integrable[x] = std::isfinite((*spec->window_integral)(x));
  } else {
    rep.qbar_method = "grid:" + std::to_string(kQbarGridPoints);
    const Real t1 = std::isfinite(w.t1) ? w.t1 : w.t0 + 1000.0;
    const Real dt = (t1 - w.t0) / kQbarGridPoints;
    Vector integral = Vector::Zero(n);
    for (int i = 0; i < kQbarGridPoints; ++i) {
      const Matrix q = spec->rates(w.t0 + i * dt);
      for (Index x = 0; x < n; ++x) {
        const Real r = -q(x, x);
        if (!std::isfinite(r)) locally_bounded = false;
        rep.qbar(x) = std::max(rep.qbar(x), r);
        integral(x) += r * dt;
      }
    }
    locally_integrable = locally_bounded;
    for (Index x = 0; x < n; ++x)
      rep.window_integrable[x] = std::isfinite(integral(x));
  }

  rep.bounded = rep.qbar.allFinite();
  // On a countable space A1 and A2 coincide; the canonical witness is the
  // family of rate level sets.
  rep.feller = rep.bounded;
  rep.locally_bounded = locally_bounded || rep.bounded;
  rep.locally_integrable = locally_integrable || rep.locally_bounded;

  Real sup = rep.qbar.size() ? rep.qbar.maxCoeff() : 0.0;
  rep.uniform_bound = sup;
  rep.uniformly_bounded = std::isfinite(sup);
  if (!rep.uniformly_bounded) {
    Index arg = 0;
    rep.qbar.maxCoeff(&arg);
    rep.unbounded_witness = arg;
  }
  if (space.overflow && kernel.overflow_rate_sup()) {
    const Real tail = *kernel.overflow_rate_sup();
    if (!std::isfinite(tail)) {
      rep.uniformly_bounded = false;
      rep.uniform_bound = kInf;
      rep.unbounded_witness = *space.overflow;
      rep.notes.push_back("states folded into '" +
                          space.labels[*space.overflow] +
                          "' have unbounded exit rates; each is finite");
    } else {
      rep.uniform_bound = std::max(rep.uniform_bound, tail);
    }
  }

  if (rep.feller) {
    Real level = 1.0;
    const Real top = rep.qbar.maxCoeff();
    while (true) {
      LevelSet ls{level, {}};
      for (Index x = 0; x < n; ++x)
        if (rep.qbar(x) < level) ls.members.push_back(x);
      rep.feller_sets.push_back(std::move(ls));
      if (level > top) break;
      level *= 2.0;
    }
  } else {
    for (Index x = 0; x < n; ++x)
      if (!std::isfinite(rep.qbar(x)))
        rep.notes.push_back("qbar('" + space.labels[x] + "') = inf");
  }
  for (Index x = 0; x < n; ++x)
    if (!rep.window_integrable[x])
      rep.notes.push_back("integral of q('" + space.labels[x] +
                          "', .) over the full window diverges");
  return rep;
}

QsBound is_qs_bounded(const RateKernel& kernel, std::span<const Index> set,
                      Real s) {
  const TimeWindow w = kernel.window();
  if (!(s > w.t0) || s > w.t1) throw DomainError("s must lie in (t0, t1]");
  QsBound out;
  out.bounded = true;
  out.bound = 0.0;
  const auto& space = kernel.space();
  for (Index x : set) {
    if (x < 0 || x >= kernel.size()) throw IndexError("state out of range");
    if (space.overflow && x == *space.overflow && kernel.overflow_rate_sup() &&
        !std::isfinite(*kernel.overflow_rate_sup())) {
      out.bounded = false;
      out.bound = kInf;
      out.witness = x;
      return out;
    }
    Real sup = 0.0;
    if (!kernel.pieces().empty()) {
      const auto& br = kernel.breakpoints();
      for (std::size_t k = 0; k < br.size() && br[k] < s; ++k)
        sup = std::max(sup, -kernel.pieces()[k](x, x));
    } else {
      const GeneratorSpec* spec = kernel.generator_spec();
      if (spec->majorant) {
        sup = spec->majorant(x, w.t0, s);
      } else {
        for (int i = 0; i < kQbarGridPoints; ++i)
          sup = std::max(sup, kernel.total_rate(
                                  x, w.t0 + (s - w.t0) * i / kQbarGridPoints));
      }
    }
    if (!std::isfinite(sup)) {
      out.bounded = false;
      out.bound = kInf;
      out.witness = x;
      return out;
    }
    out.bound = std::max(out.bound, sup);
  }
  return out;
}

std::vector<bool> can_reach(const RateKernel& kernel,
                            std::span<const Index> targets) {
  const Index n = kernel.size();
  const auto& sup = kernel.support();
  std::vector<bool> reach(static_cast<std::size_t>(n), false);
  std::deque<Index> queue;
  for (Index y : targets) {
    if (!reach[y]) {
      reach[y] = true;
      queue.push_back(y);
    }
  }
  while (!queue.empty()) {
    const Index y = queue.front();
    queue.pop_front();
    for (Index x = 0; x < n; ++x)
      if (!reach[x] && sup(x, y)) {
        reach[x] = true;
        queue.push_back(x);
      }
  }
  return reach;
}

}  // namespace mjp
