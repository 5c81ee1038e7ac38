#include "doctest.h"
#include "support.hpp"

#include "mjp/cost.hpp"
#include "mjp/errors.hpp"
#include "mjp/expansion.hpp"
#include "mjp/marginals.hpp"
#include "mjp/policy.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace mjp;
using namespace mjp::testing;

namespace {

// Two states; action "go" moves 0 -> 1 at `rate`, "stop" never moves.
MdpModel go_stop(Real rate) {
  MdpModel m;
  m.space = labels({"0", "1"});
  m.actions = {"stop", "go"};
  m.available = {{0, 1}, {0}};
  m.default_action = {0, 0};
  m.rates.assign(2, std::vector<RowVector>(2));
  m.rates[0][0] = RowVector::Zero(2);
  m.rates[0][1] = RowVector::Zero(2);
  m.rates[0][1](1) = rate;
  m.rates[1][0] = RowVector::Zero(2);
  m.finalize();
  return m;
}

RowVector point(Index n, Index x) {
  RowVector g = RowVector::Zero(n);
  g(x) = 1.0;
  return g;
}

SimConfig config(std::uint64_t seed, std::size_t paths, Real horizon, std::size_t max_jumps = 1000) {
  SimConfig c;
  c.seed = seed;
  c.replications = paths;
  c.horizon = horizon;
  c.max_jumps = max_jumps;
  return c;
}

MarkovPolicy all_fast(const MdpModel& m) {
  Matrix p = Matrix::Zero(m.size(), m.n_actions());
  for (Index x = 0; x < m.size(); ++x) {
    const Index a = m.is_available(x, 1) ? 1 : m.available[x].front();
    p(x, a) = 1.0;
  }
  return MarkovPolicy::stationary(m, p);
}

}  // namespace

TEST_SUITE("ctjmdp") {

TEST_CASE("induced kernels") {
  SUBCASE("single available action") {
    const MdpModel m = go_stop(2.0);
    Matrix p = Matrix::Zero(2, 2);
    p(0, 1) = 1.0;
    p(1, 0) = 1.0;
    const RateKernel k = induced_kernel(m, MarkovPolicy::stationary(m, p));
    CHECK(k.matrix_at(0.3).row(0).isApprox(m.row(0, 1)));
    CHECK(k.matrix_at(0.3).row(1).isZero());
  }
  SUBCASE("even mixture halves the exit rate") {
    const MdpModel m = go_stop(2.0);
    Matrix p = Matrix::Zero(2, 2);
    p(0, 0) = p(0, 1) = 0.5;
    p(1, 0) = 1.0;
    const RateKernel k = induced_kernel(m, MarkovPolicy::stationary(m, p));
    CHECK(k.total_rate(0, 0.0) == doctest::Approx(1.0));
  }
  SUBCASE("a switch in time becomes a breakpoint") {
    const MdpModel m = go_stop(2.0);
    Matrix stop = Matrix::Zero(2, 2), go = Matrix::Zero(2, 2);
    stop(0, 0) = stop(1, 0) = 1.0;
    go(0, 1) = go(1, 0) = 1.0;
    BinLayout bins;
    bins.edges = {0.0, 1.0};
    bins.reps = {0.5, 1.5};
    const RateKernel k = induced_kernel(m, MarkovPolicy(m, bins, {stop, go}));
    const auto b = k.breakpoints();
    CHECK(std::find(b.begin(), b.end(), 1.0) != b.end());
    CHECK(k.total_rate(0, 0.99) == 0.0);
    CHECK(k.total_rate(0, 1.0) == 2.0);
  }
}

TEST_CASE("policy rows are probability vectors on A(x)") {
  const MdpModel m = bench3();
  for (const char* name : {"parity", "uniform", "default", "switch"}) {
    const auto pol = make_policy(name, m);
    History h;
    for (Index x = 0; x < m.size(); ++x) {
      h.x0 = x;
      for (Real s : {0.0, 0.3, 2.0}) {
        const ActionVector p = pol->segment(h, s).probs;
        CHECK(std::abs(p.sum() - 1.0) < 1e-12);
        CHECK_NOTHROW(m.check_probs(x, p));
      }
    }
  }
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = 0.7;
  bad(1, 0) = 1.0;
  CHECK_THROWS_AS(MarkovPolicy::stationary(go_stop(1.0), bad), PolicyError);
}

TEST_CASE("an absorbing decision never jumps") {
  const MdpModel m = go_stop(5.0);
  const MarkovPolicy stop = default_policy(m);
  Rng rng(1, 0);
  const SimConfig cfg = config(1, 1, 10.0);
  for (int i = 0; i < 100; ++i) CHECK(simulate_controlled(m, stop, 0, cfg, rng).jumps.empty());
}

TEST_CASE("parity policy: first jump uses the depth-0 action") {
  const MdpModel m = bench3();
  const DepthPolicy pi = parity_policy(m);
  Rng rng(2, 0);
  const SimConfig cfg = config(2, 1, 1e6);
  const int n = 50000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const PathRecord p = simulate_controlled(m, pi, 0, cfg, rng);
    REQUIRE_FALSE(p.jumps.empty());
    s += p.jumps.front().t;
  }
  const Real mean = 1.0 / m.exit_rate(0, m.available[0].front());
  CHECK(std::abs(s / n - mean) <= 3.0 * mean / std::sqrt(n));
}

TEST_CASE("Markov policy simulation reduces to the induced kernel") {
  const MdpModel m = bench3();
  const MarkovPolicy u = uniform_policy(m);
  const MarginalTable sim = simulate_marginals(m, u, bench3_gamma(), {0.5, 1.0}, config(3, 100000, 1.0));
  const MarginalTable ex = markov_forward_marginals(m, u, bench3_gamma(), {0.5, 1.0});
  for (Index k = 0; k < 2; ++k)
    for (Index x = 0; x < 3; ++x)
      CHECK(std::abs(sim.state(k, x) - ex.state(k, x)) <= 3.0 * sim.state_se(k, x) + 1e-12);
}

TEST_CASE("marginal table invariants") {
  const MdpModel m = bench3();
  const DepthPolicy pi = parity_policy(m);
  const MarginalTable t = simulate_marginals(m, pi, bench3_gamma(), {0.25, 1.0, 2.0}, config(4, 20000, 2.0));
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    CHECK(t.total(k) <= 1.0 + 1e-12);
    for (Index x = 0; x < m.size(); ++x) {
      CHECK(std::abs(t.state_action[k].row(x).sum() - t.state(k, x)) < 1e-12);
      CHECK(t.state(k, x) >= 0.0);
    }
  }
  CHECK(std::abs(t.total(2) - 1.0) <= 1e-12);
}

TEST_CASE("exact marginals: full mass when bounded, defect when explosive") {
  const MdpModel b = bench3();
  const MarginalTable full = markov_forward_marginals(b, uniform_policy(b), bench3_gamma(), {0.5, 1.0, 2.0});
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(full.total(k) - 1.0) < 1e-6);

  const MdpModel c = controlled_birth(40);
  const MarkovPolicy fast = all_fast(c);
  const RowVector g = point(c.size(), 1);
  const MarginalTable ex = markov_forward_marginals(c, fast, g, {1.0});
  Real kept = 0.0;
  for (Index x : c.space.real_states()) kept += ex.state(0, x);
  const TransitionTable t = minimal_transition(induced_kernel(c, fast), 0.0, 1, TimeGrid::for_kernel(induced_kernel(c, fast), 0.0, 1.0, 1e-3));
  const Real defect = t.from(1).mass_defect(t.from(1).mass_defect.size() - 1);
  CHECK(std::abs(1.0 - kept - defect) < 1e-12);

  const MarginalTable sim = simulate_marginals(c, fast, g, {1.0}, config(5, 50000, 1.0, 60));
  Real sim_kept = 0.0, var = 0.0;
  for (Index x : c.space.real_states()) sim_kept += sim.state(0, x);
  var = sim_kept * (1.0 - sim_kept) / 50000.0;
  CHECK(1.0 - sim_kept > 5.0 * std::sqrt(var));
}

TEST_CASE("derived Markov policies") {
  SUBCASE("single action") {
    const MdpModel m = go_stop(1.0);
    Matrix p = Matrix::Zero(2, 2);
    p(0, 1) = 1.0;
    p(1, 0) = 1.0;
    const MarkovPolicy go = MarkovPolicy::stationary(m, p);
    const BinLayout bins = BinLayout::centered(0.1, 1.0);
    const MarginalTable t = simulate_marginals(m, go, point(2, 0), bins.reps, config(6, 2000, 1.0));
    const DerivedPolicy d = derive_markov_policy(t, m, bins);
    for (const Matrix& tab : d.policy.tables()) {
      CHECK(tab(0, 1) == 1.0);
      CHECK(tab(1, 0) == 1.0);
    }
  }
  SUBCASE("fixed point for a stationary policy") {
    const MdpModel m = bench3();
    const MarkovPolicy u = uniform_policy(m);
    const BinLayout bins = BinLayout::centered(0.25, 1.0);
    const MarginalTable t = simulate_marginals(m, u, bench3_gamma(), bins.reps, config(7, 100000, 1.0));
    const DerivedPolicy d = derive_markov_policy(t, m, bins);
    for (std::size_t k = 0; k < bins.size(); ++k)
      for (Index x = 0; x < 3; ++x) {
        const Real n = t.state(static_cast<Index>(k), x) * 100000.0;
        CHECK(std::abs(d.policy.tables()[k](x, 0) - 0.5) <= 3.0 * std::sqrt(0.25 / n));
      }
  }
  SUBCASE("parity gives a strict mixture once jumps happen") {
    const MdpModel m = bench3();
    const BinLayout bins = BinLayout::centered(0.5, 2.0);
    const MarginalTable t = simulate_marginals(m, parity_policy(m), bench3_gamma(), bins.reps, config(8, 200000, 2.0));
    const DerivedPolicy d = derive_markov_policy(t, m, bins);
    for (Index x = 0; x < 3; ++x) {
      CHECK(d.policy.tables().back()(x, 0) > 0.05);
      CHECK(d.policy.tables().back()(x, 0) < 0.95);
    }
  }
  SUBCASE("zero-mass bins use the default selector") {
    const MdpModel m = go_stop(1.0);
    const BinLayout bins = BinLayout::centered(0.5, 1.0);
    const MarginalTable t = simulate_marginals(m, uniform_policy(m), point(2, 0), bins.reps, config(9, 1000, 1.0));
    const DerivedPolicy d = derive_markov_policy(t, m, bins);
    CHECK(d.fallback_bins >= 1);
    CHECK(d.policy.tables()[0](1, 0) == 1.0);
  }
}

TEST_CASE("dominance verdicts") {
  const MdpModel m = bench3();
  const MarginalTable t = simulate_marginals(m, parity_policy(m), bench3_gamma(), {0.5, 1.0}, config(10, 10000, 1.0));
  const DominanceReport self = verify_dominance(t, t, m.space);
  CHECK(self.dominance_holds());
  CHECK(self.equality_holds());
  CHECK(self.full_mass_times.size() == 2);

  MarginalTable more = t;
  more.state(0, 0) += 0.1;
  CHECK_FALSE(verify_dominance(t, more, m.space).dominance_holds());
}

TEST_CASE("bounded benchmark: derived policy reproduces the marginals") {
  const MdpModel m = bench3();
  const DepthPolicy pi = parity_policy(m);
  const std::vector<Real> times{0.5, 1.0};
  const MarginalTable mc = simulate_marginals(m, pi, bench3_gamma(), times, config(11, 200000, 1.0));
  const DerivedWithErrors d =
      derive_with_errors(m, pi, bench3_gamma(), BinLayout::centered(0.05, 1.0), times, config(12, 200000, 1.0), 5);
  const DominanceReport r = verify_dominance(mc, d.exact, m.space);
  CHECK(r.dominance_holds());
  CHECK(r.equality_holds());
}

TEST_CASE("generalized forward identity") {
  const MdpModel m = bench3();
  const std::vector<Index> set{1};
  const GkeReport r = gke_residual(m, parity_policy(m), 0, set, {0.0, 0.5, 1.0}, config(13, 100000, 1.0));
  CHECK(r.max_z <= 3.0);

  const MdpModel c = controlled_birth(20);
  const std::vector<Index> beyond{*c.space.overflow};
  CHECK_THROWS_AS(gke_residual(c, birth_policy(c), 0, beyond, {0.0, 1.0}, config(14, 100, 1.0)), GuardError);
}

TEST_CASE("expansion with an initial point") {
  const MdpModel m = bench3();
  const ExpandedModel ex = expand_with_initial_state(m, point(3, 2), 1.0);
  CHECK(ex.stay_probability == doctest::Approx(std::exp(-1.0)));
  const DepthPolicy parity = parity_policy(m);
  const LiftedPolicy lifted(ex, parity);
  Rng rng(15, 0);
  const SimConfig cfg = config(15, 1, 3.0);
  int stayed = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const PathRecord p = simulate_controlled(ex.model, lifted, ex.x_prime, cfg, rng);
    if (p.jumps.empty()) {
      ++stayed;
    } else {
      CHECK(p.jumps.front().x == 2);
    }
  }
  const double f = static_cast<double>(stayed) / n, q = std::exp(-1.0);
  CHECK(std::abs(f - q) <= 3.0 * std::sqrt(q * (1 - q) / n));

  MdpModel with_cemetery = m;
  with_cemetery.space.cemetery = 2;
  CHECK_THROWS(expand_with_initial_state(with_cemetery, point(3, 0), 1.0));
}

TEST_CASE("cost criteria") {
  const MdpModel m = bench3();
  const RowVector g = bench3_gamma();
  SUBCASE("unit running cost") {
    const CostModel c = CostModel::constant_running(m, 1.0, 1.0);
    const CostValue ex = evaluate_cost_exact(m, uniform_policy(m), g, c, Criterion::infinite_discounted, 20.0);
    CHECK(std::abs(ex.value - 1.0) <= 1e-4 + ex.tail_bound);
    const CostValue mc = evaluate_cost_mc(m, parity_policy(m), g, c, Criterion::infinite_discounted, 20.0,
                                          config(16, 20000, 20.0));
    CHECK(std::abs(mc.value - 1.0) <= 3.0 * mc.std_error + mc.tail_bound + 1e-9);
  }
  SUBCASE("terminal cost") {
    CostModel c = CostModel::constant_running(m, 0.0, 0.0);
    c.instant.push_back({2.0, Matrix::Constant(3, 2, 2.5)});
    const CostValue ex = evaluate_cost_exact(m, uniform_policy(m), g, c, Criterion::finite_horizon, 2.0);
    CHECK(ex.value == doctest::Approx(2.5).epsilon(1e-6));
    const CostValue mc =
        evaluate_cost_mc(m, parity_policy(m), g, c, Criterion::finite_horizon, 2.0, config(17, 5000, 2.0));
    CHECK(mc.value == doctest::Approx(2.5).epsilon(1e-12));
  }
  SUBCASE("jump costs need the Monte Carlo route") {
    CostModel c = CostModel::constant_running(m, 1.0, 1.0);
    c.jump = Matrix::Ones(3, 3);
    CHECK_THROWS_AS(evaluate_cost_exact(m, uniform_policy(m), g, c, Criterion::infinite_with_jump_costs, 20.0),
                    ConfigurationError);
    const CostValue mc = evaluate_cost_mc(m, uniform_policy(m), g, c, Criterion::infinite_with_jump_costs, 20.0,
                                          config(18, 5000, 20.0));
    CHECK(mc.value > 1.0);
  }
  SUBCASE("Markov policy: both routes agree") {
    CostModel c = CostModel::constant_running(m, 0.0, 0.5);
    for (Index x = 0; x < 3; ++x) {
      c.running(x, 0) = 1.0 + x;
      c.running(x, 1) = 3.0 + 2.0 * x;
    }
    const MarkovPolicy u = uniform_policy(m);
    const CostValue ex = evaluate_cost_exact(m, u, g, c, Criterion::finite_horizon, 2.0);
    const CostValue mc = evaluate_cost_mc(m, u, g, c, Criterion::finite_horizon, 2.0, config(19, 50000, 2.0));
    CHECK(std::abs(ex.value - mc.value) <= 3.0 * mc.std_error);
  }
}

TEST_CASE("discount rates") {
  DiscountRate d;
  d.breaks = {0.0, 1.0};
  d.values = {1.0, 0.5};
  CHECK(d.cumulative(2.0) == doctest::Approx(1.5));
  CHECK(d.discounted_length(0.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)));
  const Real tail = std::exp(-1.0) * (1.0 - std::exp(-0.5)) / 0.5;
  CHECK(d.discounted_length(1.0, 2.0) == doctest::Approx(tail));
}

}
