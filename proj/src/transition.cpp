#include "mjp/transition.hpp"

#include "mjp/generators.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#ifdef __SSE__
#include <xmmintrin.h>
#endif

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace mjp {

void TransitionTable::add(TransitionRows rows) {
  const Index x = rows.start;
  rows_.insert_or_assign(x, std::move(rows));
}

bool TransitionTable::has(Index x) const { return rows_.count(x) != 0; }

const TransitionRows& TransitionTable::from(Index x) const {
  auto it = rows_.find(x);
  if (it == rows_.end())
    throw IndexError("table has no rows for start state " + std::to_string(x));
  return it->second;
}

std::vector<Index> TransitionTable::starts() const {
  std::vector<Index> out;
  for (const auto& [x, r] : rows_) out.push_back(x);
  return out;
}

Real TransitionTable::mass(Index x, std::size_t node,
                           std::span<const Index> set) const {
  const auto& r = from(x);
  Real m = 0.0;
  for (Index y : set) m += r.values(static_cast<Index>(node), y);
  return m;
}

RowVector TransitionTable::row_at(Index x, Real t) const {
  const auto& r = from(x);
  if (t < grid_.start() || t > grid_.end())
    throw DomainError("time outside the table grid");
  const std::size_t k = grid_.locate(t);
  const Index kk = static_cast<Index>(k);
  if (k + 1 >= grid_.size() || grid_[k] == t) return r.values.row(kk);
  const Real lam = (t - grid_[k]) / (grid_[k + 1] - grid_[k]);
  return (1.0 - lam) * r.values.row(kk) + lam * r.values.row(kk + 1);
}

TransitionTable TransitionTable::scaled(Real c) const {
  TransitionTable out(grid_, u_, sink_);
  out.method = method + "*" + std::to_string(c);
  out.tolerance = tolerance;
  out.monitored = monitored;
  for (const auto& [x, r] : rows_) {
    TransitionRows s = r;
    s.values *= c;
    for (Index k = 0; k < s.values.rows(); ++k) {
      Real m = 0.0;
      for (Index y = 0; y < s.values.cols(); ++y)
        if (!sink_[y]) m += s.values(k, y);
      s.mass_defect(k) = 1.0 - m;
    }
    out.add(std::move(s));
  }
  return out;
}

namespace {

// Terms decay geometrically; subnormal arithmetic would dominate the run time
// of long recursions, so they are flushed to zero inside the term loop.
class FlushDenormals {
 public:
#ifdef __SSE__
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

std::vector<bool> sink_mask(const StateSpace& space) {
  std::vector<bool> m(static_cast<std::size_t>(space.size()));
  for (Index x = 0; x < space.size(); ++x) m[x] = space.is_sink(x);
  return m;
}

SparseMatrix off_diagonal(const Matrix& q) {
  std::vector<Eigen::Triplet<Real>> trips;
  for (Index x = 0; x < q.rows(); ++x)
    for (Index y = 0; y < q.cols(); ++y)
      if (x != y && q(x, y) != 0.0) trips.emplace_back(x, y, q(x, y));
  SparseMatrix s(q.rows(), q.cols());
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

// Per-step data of the grid pass: cur(k+1) = decay * cur(k) + prev(k) L_k +
// prev(k+1) R_k. Ordinary steps interpolate the inflow into y linearly.
// On the first step of a piece a source state may hold mass far from
// equilibrium with its new exit rate, so there its occupation is taken as
// the left value decaying at its own rate plus a replenished part shaped like
// the response to a constant inflow, (1 - e^{-q s}) / (1 - e^{-q h}).
struct StepRates {
  std::vector<SparseMatrix> from_left;   // weights on prev(k)
  std::vector<SparseMatrix> from_right;  // weights on prev(k+1)
  std::vector<std::size_t> which;        // per step, index into the above
  RowMatrix decay;                       // steps x states
};

// h * int_0^1 e^{-a (1-u)} e^{-b u} du
Real two_rate_weight(Real a, Real b, Real h) {
  const Real lo = std::min(a, b), d = std::abs(a - b);
  const Real phi1 = d < 1e-300 ? 1.0 : -std::expm1(-d) / d;
  return h * std::exp(-lo) * phi1;
}

// h * int_0^1 e^{-a (1-u)} (1 - e^{-b u}) / (1 - e^{-b}) du; the linear
// shape u when b is negligible.
Real replenish_weight(Real a, Real b, Real h, Real w1) {
  if (b < 1e-8) return w1;
  const Real phi1 = a < 1e-300 ? 1.0 : -std::expm1(-a) / a;
  return std::max(0.0, (h * phi1 - two_rate_weight(a, b, h)) / -std::expm1(-b));
}

constexpr Real kStiffHazard = 3.0;

// States whose step hazard exceeds kStiffHazard hold no mass for longer than
// a small fraction of the step. A jump into such a state is continued at once
// through the stiff states to where the chain leaves them, so that several
// jumps inside one step are not lost. Stiff states that cannot leave the
// stiff set stay ordinary.
SparseMatrix route_stiff(const SparseMatrix& j, const Vector& haz, Real h) {
  const Index n = static_cast<Index>(haz.size());
  std::vector<bool> stiff(static_cast<std::size_t>(n));
  bool any = false;
  for (Index x = 0; x < n; ++x) any |= (stiff[x] = haz(x) > kStiffHazard);
  if (!any) return j;
  const Matrix dense = Matrix(j);
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<bool> leaves(static_cast<std::size_t>(n), false);
    for (Index x = 0; x < n; ++x) {
      if (!stiff[x]) continue;
      Real out = 0.0;
      for (Index y = 0; y < n; ++y)
        if (!stiff[y] && y != x) out += dense(x, y);
      leaves[x] = out > 0.0 || dense.row(x).sum() < haz(x) / h * (1.0 - 1e-12);
    }
    for (bool grew = true; grew;) {
      grew = false;
      for (Index x = 0; x < n; ++x) {
        if (!stiff[x] || leaves[x]) continue;
        for (Index y = 0; y < n; ++y)
          if (stiff[y] && leaves[y] && dense(x, y) > 0.0) {
            leaves[x] = grew = true;
            break;
          }
      }
    }
    for (Index x = 0; x < n; ++x)
      if (stiff[x] && !leaves[x]) stiff[x] = false, changed = true;
  }
  std::vector<Index> in_s, in_n;
  for (Index x = 0; x < n; ++x) (stiff[x] ? in_s : in_n).push_back(x);
  if (in_s.empty()) return j;
  const Index ns = static_cast<Index>(in_s.size()), nn = static_cast<Index>(in_n.size());
  Matrix a = Matrix::Identity(ns, ns), b(ns, nn);
  for (Index i = 0; i < ns; ++i) {
    const Real q = haz(in_s[i]) / h;
    for (Index k = 0; k < ns; ++k) a(i, k) -= dense(in_s[i], in_s[k]) / q;
    for (Index k = 0; k < nn; ++k) b(i, k) = dense(in_s[i], in_n[k]) / q;
  }
  const Matrix exit = a.partialPivLu().solve(b);
  std::vector<Eigen::Triplet<Real>> trips;
  for (Index x = 0; x < n; ++x)
    for (Index k = 0; k < nn; ++k) {
      const Index y = in_n[k];
      Real r = y != x ? dense(x, y) : 0.0;
      for (Index i = 0; i < ns; ++i)
        if (in_s[i] != x) r += dense(x, in_s[i]) * exit(i, k);
      if (stiff[x]) {
        // the stiff source's own chain, started from x
        r = 0.0;
        for (Index i = 0; i < ns; ++i)
          if (in_s[i] == x) r = exit(i, k) * haz(x) / h;
      }
      if (y != x && r > 0.0) trips.emplace_back(x, y, r);
    }
  SparseMatrix out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

void add_step(StepRates& sr, const SparseMatrix& j_start_raw, const SparseMatrix& j_end_raw,
              const Vector& haz, Real h, const std::vector<bool>& transient) {
  const SparseMatrix j_start = route_stiff(j_start_raw, haz, h);
  const SparseMatrix j_end = route_stiff(j_end_raw, haz, h);
  const Index n = static_cast<Index>(haz.size());
  Vector w0(n), w1(n);
  for (Index y = 0; y < n; ++y) {
    const auto w = exp_trapezoid_weights(haz(y), h);
    w0(y) = w.w0;
    w1(y) = w.w1;
  }
  std::vector<Eigen::Triplet<Real>> left, right;
  for (Index x = 0; x < j_start.outerSize(); ++x)
    for (SparseMatrix::InnerIterator it(j_start, x); it; ++it) {
      const Index y = it.col();
      Real c = w0(y);
      if (transient[static_cast<std::size_t>(x)]) {
        const Real g = replenish_weight(haz(y), haz(x), h, w1(y));
        c = std::max(0.0, two_rate_weight(haz(y), haz(x), h) - std::exp(-haz(x)) * g);
      }
      left.emplace_back(x, y, it.value() * c);
    }
  for (Index x = 0; x < j_end.outerSize(); ++x)
    for (SparseMatrix::InnerIterator it(j_end, x); it; ++it) {
      const Index y = it.col();
      const Real c = transient[static_cast<std::size_t>(x)] ? replenish_weight(haz(y), haz(x), h, w1(y)) : w1(y);
      right.emplace_back(x, y, it.value() * c);
    }
  SparseMatrix l(n, n), r(n, n);
  l.setFromTriplets(left.begin(), left.end());
  r.setFromTriplets(right.begin(), right.end());
  sr.from_left.push_back(std::move(l));
  sr.from_right.push_back(std::move(r));
}

StepRates discretize(const RateKernel& kernel, const TimeGrid& grid) {
  const Index n = kernel.size();
  const std::size_t steps = grid.size() - 1;
  StepRates sr;
  sr.decay.resize(static_cast<Index>(steps), n);
  sr.which.resize(steps);

  const Real t1 = kernel.window().t1;
  auto clamp = [&](Real t) { return t < t1 ? t : std::nextafter(t1, kernel.window().t0); };

  if (!kernel.pieces().empty()) {
    std::vector<SparseMatrix> jumps;
    for (const auto& q : kernel.pieces()) jumps.push_back(off_diagonal(q));
    std::map<std::tuple<std::size_t, Real, std::vector<bool>>, std::size_t> cache;
    std::size_t last = 0;
    Real since = 0.0;
    bool fresh_piece = true;
    std::vector<bool> transient(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < steps; ++k) {
      const Real h = grid[k + 1] - grid[k];
      const std::size_t p = kernel.piece_index(grid[k]);
      if (k > 0 && p != last) {
        since = 0.0;
        fresh_piece = true;
      }
      last = p;
      const Vector haz = -kernel.pieces()[p].diagonal() * h;
      // stiff sources keep the decaying shape until the carried-over mass is gone
      for (Index x = 0; x < n; ++x)
        transient[static_cast<std::size_t>(x)] =
            fresh_piece && (since == 0.0 || (haz(x) > 1.0 && haz(x) * since / h < 40.0));
      since += h;
      auto [it, fresh] = cache.try_emplace({p, h, transient}, sr.from_left.size());
      if (fresh) add_step(sr, jumps[p], jumps[p], haz, h, transient);
      sr.which[k] = it->second;
      sr.decay.row(static_cast<Index>(k)) = (-haz).array().exp().transpose();
    }
    return sr;
  }
  Matrix q_left = kernel.matrix_at(clamp(grid[0]));
  SparseMatrix j_left = off_diagonal(q_left);
  for (std::size_t k = 0; k < steps; ++k) {
    const Real h = grid[k + 1] - grid[k];
    Matrix q_right = kernel.matrix_at(clamp(grid[k + 1]));
    SparseMatrix j_right = off_diagonal(q_right);
    const Vector haz = -0.5 * h * (q_left.diagonal() + q_right.diagonal());
    add_step(sr, j_left, j_right, haz, h, std::vector<bool>(static_cast<std::size_t>(n), false));
    sr.which[k] = k;
    sr.decay.row(static_cast<Index>(k)) = (-haz).array().exp().transpose();
    q_left = std::move(q_right);
    j_left = std::move(j_right);
  }
  return sr;
}

RowMatrix initial_term(const StepRates& sr, Index x, Index nodes, Index n) {
  RowMatrix p = RowMatrix::Zero(nodes, n);
  Real s = 1.0;
  p(0, x) = 1.0;
  for (Index k = 1; k < nodes; ++k) {
    s *= sr.decay(k - 1, x);
    p(k, x) = s;
  }
  return p;
}

// cur(k+1) = decay * cur(k) + prev(k) L_k + prev(k+1) R_k.
void advance_term(const StepRates& sr, const RowMatrix& prev, RowMatrix& cur) {
  const Index nodes = prev.rows();
  const Index n = prev.cols();
  cur.row(0).setZero();
  RowVector in(n);
  for (Index k = 0; k + 1 < nodes; ++k) {
    const std::size_t w = sr.which[static_cast<std::size_t>(k)];
    in.noalias() = prev.row(k) * sr.from_left[w];
    in.noalias() += prev.row(k + 1) * sr.from_right[w];
    cur.row(k + 1).array() = sr.decay.row(k).array() * cur.row(k).array() + in.array();
  }
}

void fill_defect(TransitionRows& rows, const std::vector<bool>& sink) {
  const Index nodes = rows.values.rows();
  rows.mass_defect.resize(nodes);
  for (Index k = 0; k < nodes; ++k) {
    Real m = 0.0;
    for (Index y = 0; y < rows.values.cols(); ++y)
      if (!sink[y]) m += rows.values(k, y);
    rows.mass_defect(k) = 1.0 - m;
  }
}

void check_start(const RateKernel& kernel, Real u, const TimeGrid& grid) {
  if (std::abs(grid.start() - u) > 1e-12 * std::max(1.0, std::abs(u)))
    throw ConfigurationError("grid must start at u");
  if (!kernel.window().contains(u)) throw DomainError("u outside the window");
  if (grid.end() > kernel.window().t1) throw DomainError("grid ends after t1");
  for (Real bp : kernel.breakpoints_in(grid.start(), grid.end()))
    if (grid.find(bp) < 0)
      throw ConfigurationError("grid does not resolve kernel breakpoint " +
                               std::to_string(bp));
}

}  // namespace

Real survival(const RateKernel& kernel, Real u, Index x, Real t) {
  if (t < u) throw DomainError("survival requires u <= t");
  if (!kernel.window().contains(u) || t > kernel.window().t1)
    throw DomainError("survival interval outside window");
  if (t == u) return 1.0;
  const int panels = kernel.pieces().empty() ? 1000 : 1;
  return std::exp(-kernel.hazard(x, u, t, panels));
}

FellerTermStack feller_terms(const RateKernel& kernel, Real u, Index x,
                             const TimeGrid& grid, int n_terms) {
  if (n_terms < 0) throw ConfigurationError("term count must be >= 0");
  if (x < 0 || x >= kernel.size()) throw IndexError("start state out of range");
  check_start(kernel, u, grid);
  const StepRates sr = discretize(kernel, grid);
  const Index nodes = static_cast<Index>(grid.size());
  FellerTermStack stack;
  stack.terms.push_back(initial_term(sr, x, nodes, kernel.size()));
  stack.partial_sums.push_back(stack.terms.back());
  for (int n = 1; n <= n_terms; ++n) {
    RowMatrix cur(nodes, kernel.size());
    advance_term(sr, stack.terms.back(), cur);
    stack.partial_sums.push_back(stack.partial_sums.back() + cur);
    stack.terms.push_back(std::move(cur));
  }
  return stack;
}

TransitionTable minimal_transition(const RateKernel& kernel, Real u,
                                   std::span<const Index> starts,
                                   const TimeGrid& grid,
                                   const TransitionOptions& opts) {
  if (!(opts.tol > 0.0)) throw ConfigurationError("tol must be > 0");
  if (opts.max_terms < 0) throw ConfigurationError("max_terms must be >= 0");
  check_start(kernel, u, grid);
  FlushDenormals ftz;
  const Index n = kernel.size();
  const Index nodes = static_cast<Index>(grid.size());
  const StepRates sr = discretize(kernel, grid);

  std::vector<Index> monitored = opts.monitored;
  if (monitored.empty())
    for (Index y = 0; y < n; ++y) monitored.push_back(y);
  const auto reach = can_reach(kernel, monitored);
  std::vector<Index> relevant;
  for (Index y = 0; y < n; ++y)
    if (reach[y]) relevant.push_back(y);

  TransitionTable table(grid, u, sink_mask(kernel.space()));
  table.method = "feller";
  table.tolerance = opts.tol;
  table.monitored = monitored;

  auto term_max = [&](const RowMatrix& term, Vector* per_node) {
    Real m = 0.0;
    for (Index k = 0; k < nodes; ++k) {
      Real mk = 0.0;
      for (Index y : relevant) mk = std::max(mk, term(k, y));
      if (per_node) (*per_node)(k) = mk;
      m = std::max(m, mk);
    }
    return m;
  };

  bool failed = false;
  Real worst_tail = 0.0;
  for (Index x : starts) {
    if (x < 0 || x >= n) throw IndexError("start state out of range");
    RowMatrix prev = initial_term(sr, x, nodes, n);
    RowMatrix cur(nodes, n);
    TransitionRows rows;
    rows.start = x;
    rows.values = prev;
    rows.term_tail = Vector::Zero(nodes);

    std::vector<Real> ratios;
    Real last_max = term_max(prev, nullptr);
    bool done = last_max == 0.0;
    int n_terms = 0;
    Real tail = 0.0;
    while (!done && n_terms < opts.max_terms) {
      advance_term(sr, prev, cur);
      ++n_terms;
      rows.values += cur;
      Vector node_max(nodes);
      const Real m = term_max(cur, &node_max);
      if (m == 0.0) {
        done = true;
        break;
      }
      ratios.push_back(last_max > 0.0 ? m / last_max : kInf);
      last_max = m;
      if (ratios.size() >= 3) {
        const Real rho = std::max({ratios[ratios.size() - 1],
                                   ratios[ratios.size() - 2],
                                   ratios[ratios.size() - 3]});
        if (rho < 1.0) {
          const Real factor = rho / (1.0 - rho);
          tail = m * factor;
          rows.term_tail = node_max * factor;
          if (tail <= opts.tol) done = true;
        } else {
          tail = kInf;
          rows.term_tail = Vector::Constant(nodes, kInf);
        }
      }
      std::swap(prev, cur);
    }
    rows.n_terms = n_terms;
    rows.converged = done;
    if (!done) {
      failed = true;
      worst_tail = std::max(worst_tail, tail);
    }
    fill_defect(rows, table.sink());
    table.add(std::move(rows));
  }
  if (failed) {
    std::ostringstream os;
    os << "term sum did not converge within " << opts.max_terms
       << " terms (tail estimate " << worst_tail << ")";
    throw ConvergenceError(std::move(table), worst_tail, os.str());
  }
  return table;
}

TransitionTable minimal_transition(const RateKernel& kernel, Real u, Index x,
                                   const TimeGrid& grid,
                                   const TransitionOptions& opts) {
  const Index starts[] = {x};
  return minimal_transition(kernel, u, std::span<const Index>(starts), grid, opts);
}

RowVector minimal_transition_row(const RateKernel& kernel, Real u, Index x,
                                 Real t, Real h, const TransitionOptions& opts) {
  if (t < u) throw DomainError("t must be >= u");
  if (x < 0 || x >= kernel.size()) throw IndexError("start state out of range");
  if (t == u) {
    RowVector e = RowVector::Zero(kernel.size());
    e(x) = 1.0;
    return e;
  }
  const auto grid = TimeGrid::for_kernel(kernel, u, t, h);
  const auto table = minimal_transition(kernel, u, x, grid, opts);
  return table.from(x).values.row(static_cast<Index>(grid.size()) - 1);
}

TransitionTable ode_oracle(const RateKernel& kernel, Real u,
                           std::span<const Index> starts, const TimeGrid& grid) {
  check_start(kernel, u, grid);
  const Index n = kernel.size();
  const Index nodes = static_cast<Index>(grid.size());
  TransitionTable table(grid, u, sink_mask(kernel.space()));
  table.method = kernel.pieces().empty() ? "rk4" : "expm";

  // Step propagators, shared across start states.
  std::vector<Matrix> props;
  props.reserve(grid.size() - 1);
  if (!kernel.pieces().empty()) {
    struct Cached {
      std::size_t piece;
      Real h;
      std::size_t index;
    };
    std::vector<Cached> cache;
    std::vector<Matrix> unique;
    std::vector<std::size_t> which;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      const Real h = grid[k + 1] - grid[k];
      const std::size_t p = kernel.piece_index(grid[k]);
      auto it = std::find_if(cache.begin(), cache.end(), [&](const Cached& c) {
        return c.piece == p && std::abs(c.h - h) <= 1e-12 * h;
      });
      if (it == cache.end()) {
        Matrix qh = kernel.pieces()[p] * h;
        unique.push_back(qh.exp());
        cache.push_back({p, h, unique.size() - 1});
        which.push_back(unique.size() - 1);
      } else {
        which.push_back(it->index);
      }
    }
    for (std::size_t k = 0; k < which.size(); ++k) props.push_back(unique[which[k]]);
  } else {
    const Real t1 = kernel.window().t1;
    auto clamp = [&](Real t) {
      return t < t1 ? t : std::nextafter(t1, kernel.window().t0);
    };
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      const Real a = grid[k];
      const Real b = grid[k + 1];
      const Real rate = std::max(kernel.matrix_at(clamp(a)).diagonal().cwiseAbs().maxCoeff(),
                                 kernel.matrix_at(clamp(b)).diagonal().cwiseAbs().maxCoeff());
      const Real needed = std::ceil((b - a) * rate / 0.05);
      if (!std::isfinite(needed) || needed > 1e7)
        throw ConfigurationError("ode oracle: step size failure near t=" +
                                 std::to_string(b) + " (rate " +
                                 std::to_string(rate) + ")");
      const int m = std::max(1, static_cast<int>(needed));
      const Real dt = (b - a) / m;
      Matrix prop = Matrix::Identity(n, n);
      for (int i = 0; i < m; ++i) {
        const Real s = a + i * dt;
        const Matrix q0 = kernel.matrix_at(clamp(s));
        const Matrix qm = kernel.matrix_at(clamp(s + 0.5 * dt));
        const Matrix q1 = kernel.matrix_at(clamp(s + dt));
        const Matrix k1 = prop * q0;
        const Matrix k2 = (prop + 0.5 * dt * k1) * qm;
        const Matrix k3 = (prop + 0.5 * dt * k2) * qm;
        const Matrix k4 = (prop + dt * k3) * q1;
        prop += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      props.push_back(std::move(prop));
    }
  }

  for (Index x : starts) {
    if (x < 0 || x >= n) throw IndexError("start state out of range");
    TransitionRows rows;
    rows.start = x;
    rows.values = RowMatrix::Zero(nodes, n);
    rows.values(0, x) = 1.0;
    for (Index k = 0; k + 1 < nodes; ++k)
      rows.values.row(k + 1).noalias() = rows.values.row(k) * props[static_cast<std::size_t>(k)];
    rows.values = rows.values.cwiseMax(0.0);
    rows.term_tail = Vector::Zero(nodes);
    fill_defect(rows, table.sink());
    table.add(std::move(rows));
  }
  return table;
}

TransitionTable ode_oracle(const RateKernel& kernel, Real u, Index x,
                           const TimeGrid& grid) {
  const Index starts[] = {x};
  return ode_oracle(kernel, u, std::span<const Index>(starts), grid);
}

std::vector<Index> required_intermediate_states(const RateKernel& kernel,
                                                const TransitionTable& from_u,
                                                Index x, Real s,
                                                std::span<const Index> targets) {
  const long ks = from_u.grid().find(s);
  if (ks < 0) throw ConfigurationError("s is not a grid node of the first table");
  const auto reach = can_reach(kernel, targets);
  std::vector<Index> out;
  const auto& row = from_u.from(x).values;
  for (Index y = 0; y < kernel.size(); ++y)
    if (reach[y] && row(ks, y) > 0.0) out.push_back(y);
  return out;
}

Real chapman_kolmogorov_residual(const RateKernel& kernel,
                                 const TransitionTable& from_u, Index x,
                                 const TransitionTable& from_s, Real s, Real t,
                                 std::span<const Index> targets) {
  const Real u = from_u.start_time();
  if (!(u < s && s < t)) throw DomainError("need u < s < t");
  if (std::abs(from_s.start_time() - s) > 1e-12 * std::max(1.0, std::abs(s)))
    throw ConfigurationError("second table must start at s");
  const long ks = from_u.grid().find(s);
  const long kt = from_u.grid().find(t);
  const long kt2 = from_s.grid().find(t);
  if (ks < 0 || kt < 0 || kt2 < 0)
    throw ConfigurationError("s and t must be grid nodes of both tables");

  const auto required = required_intermediate_states(kernel, from_u, x, s, targets);
  std::vector<long> missing;
  for (Index y : required)
    if (!from_s.has(y)) missing.push_back(static_cast<long>(y));
  if (!missing.empty()) {
    std::ostringstream os;
    os << "missing intermediate rows for start states:";
    for (long y : missing) os << ' ' << kernel.space().labels[y];
    throw MissingRowsError(std::move(missing), os.str());
  }

  std::vector<std::vector<Index>> sets;
  for (Index y : targets) sets.push_back({y});
  sets.emplace_back(targets.begin(), targets.end());

  const auto& row_u = from_u.from(x).values;
  Real worst = 0.0;
  for (const auto& set : sets) {
    const Real direct = from_u.mass(x, static_cast<std::size_t>(kt), set);
    Real composed = 0.0;
    for (Index y : required)
      composed += from_s.mass(y, static_cast<std::size_t>(kt2), set) * row_u(ks, y);
    worst = std::max(worst, std::abs(direct - composed));
  }
  return worst;
}

SweepResult truncation_sweep(const std::string& generator,
                             std::map<std::string, Real> params,
                             const std::string& level_param,
                             const std::vector<int>& levels, Real u,
                             const std::string& start_label, Real t, Real h,
                             const std::vector<std::string>& target_labels,
                             const TransitionOptions& opts, Real tol) {
  if (levels.empty()) throw ConfigurationError("no truncation levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1])
      throw ConfigurationError("truncation levels must increase");
  SweepResult res;
  res.levels = levels;
  std::vector<RateKernel> kernels;
  for (int level : levels) {
    params[level_param] = level;
    kernels.push_back(make_generator(generator, params, TimeWindow{}));
  }
  // Labels present at every level, excluding sinks.
  for (Index y = 0; y < kernels.front().size(); ++y) {
    if (kernels.front().space().is_sink(y)) continue;
    const auto& label = kernels.front().space().labels[y];
    bool everywhere = true;
    for (const auto& k : kernels) {
      const auto& l = k.space().labels;
      auto it = std::find(l.begin(), l.end(), label);
      if (it == l.end() || k.space().is_sink(static_cast<Index>(it - l.begin())))
        everywhere = false;
    }
    if (everywhere) res.common_labels.push_back(label);
  }
  res.values.resize(static_cast<Index>(levels.size()),
                    static_cast<Index>(res.common_labels.size()));
  res.kept_mass.resize(static_cast<Index>(levels.size()));
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    const auto& k = kernels[i];
    TransitionOptions o = opts;
    o.monitored.clear();
    if (target_labels.empty()) {
      o.monitored = k.space().real_states();
    } else {
      for (const auto& l : target_labels) o.monitored.push_back(k.space().index_of(l));
    }
    const Index x = k.space().index_of(start_label);
    const TimeGrid grid = TimeGrid::for_kernel(k, u, t, h);
    auto table = minimal_transition(k, u, x, grid, o);
    const Index last = static_cast<Index>(grid.size()) - 1;
    for (std::size_t j = 0; j < res.common_labels.size(); ++j)
      res.values(static_cast<Index>(i), static_cast<Index>(j)) =
          table.from(x).values(last, k.space().index_of(res.common_labels[j]));
    res.kept_mass(static_cast<Index>(i)) = 1.0 - table.from(x).mass_defect(last);
    res.tables.push_back(std::move(table));
  }
  res.max_violation = 0.0;
  for (Index i = 1; i < res.values.rows(); ++i) {
    for (Index j = 0; j < res.values.cols(); ++j)
      res.max_violation = std::max(res.max_violation, res.values(i - 1, j) - res.values(i, j));
    res.max_violation = std::max(res.max_violation, res.kept_mass(i - 1) - res.kept_mass(i));
  }
  if (res.max_violation > tol) {
    std::ostringstream os;
    os << "truncation sweep not monotone: decrease of " << res.max_violation;
    throw PropertyFailure(os.str());
  }
  return res;
}

}  // namespace mjp
