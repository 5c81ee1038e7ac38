#include "doctest.h"
#include "support.hpp"

#include "mjp/errors.hpp"
#include "mjp/generators.hpp"
#include "mjp/transition.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <vector>

using namespace mjp;
using namespace mjp::testing;

namespace {

Real max_diff(const TransitionTable& a, const TransitionTable& b, Index x) {
  return (a.from(x).values - b.from(x).values).cwiseAbs().maxCoeff();
}

// Three states cycling a -> b -> c -> a; b's exit rate is `fast` on [0.5, 0.8).
RateKernel switching(Real fast) {
  Matrix q1(3, 3), q2(3, 3);
  q1 << -1, 1, 0, 0, -0.5, 0.5, 0.2, 0, -0.2;
  q2 << -1, 1, 0, 0, -fast, fast, 0.2, 0, -0.2;
  return RateKernel::piecewise(labels({"a", "b", "c"}), TimeWindow{}, {0.0, 0.5, 0.8}, {q1, q2, q1});
}

}  // namespace

TEST_SUITE("transition") {

TEST_CASE("survival") {
  CHECK(survival(zero_kernel(), 0.0, 0, 5.0) == 1.0);
  const RateKernel osc = fms_oscillator(8);
  CHECK(survival(osc, 0.0, osc.space().index_of("0"), 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(survival(osc, 0.0, osc.space().index_of("3"), 0.25) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("term zero is survival on the diagonal") {
  const RateKernel k = two_state(1.0, 2.0);
  const TimeGrid g(0.0, 1.0, 1e-3);
  const FellerTermStack s = feller_terms(k, 0.0, 0, g, 0);
  REQUIRE(s.terms.size() == 1);
  for (std::size_t n = 0; n < g.size(); n += 100) {
    CHECK(s.terms[0](static_cast<Index>(n), 0) == doctest::Approx(std::exp(-g[n])).epsilon(1e-12));
    CHECK(s.terms[0](static_cast<Index>(n), 1) == 0.0);
  }
}

TEST_CASE("first term against quadrature of its integrand") {
  SUBCASE("two-state") {
    const RateKernel k = two_state(1.0, 2.0);
    const TimeGrid g(0.0, 1.0, 1e-3);
    const FellerTermStack s = feller_terms(k, 0.0, 0, g, 1);
    const Real want = simpson([](Real w) { return std::exp(-w) * std::exp(-2.0 * (1.0 - w)); }, 0.0, 1.0);
    CHECK(s.terms[1](static_cast<Index>(g.size() - 1), 1) == doctest::Approx(want).epsilon(1e-6));
  }
  SUBCASE("oscillator from 0") {
    const RateKernel osc = fms_oscillator(8);
    const TimeGrid g(0.0, 1.0, 1e-3);
    const FellerTermStack s = feller_terms(osc, 0.0, osc.space().index_of("0"), g, 1);
    const Index last = static_cast<Index>(g.size() - 1);
    for (int j : {1, -1, 2, 4, -6}) {
      const Real q = std::ldexp(1.0, std::abs(j));
      const Real want = std::ldexp(1.0, -(std::abs(j) + 1)) *
                        simpson([q](Real w) { return std::exp(-w) * std::exp(-q * (1.0 - w)); }, 0.0, 1.0, 20000);
      CHECK(s.terms[1](last, osc.space().index_of(std::to_string(j))) == doctest::Approx(want).epsilon(1e-5));
    }
  }
}

TEST_CASE("terms are nonnegative and partial sums increase") {
  const RateKernel k = RateKernel::constant(numbered(4), TimeWindow{}, random_generator(5, 4));
  const TimeGrid g(0.0, 2.0, 1e-2);
  const FellerTermStack s = feller_terms(k, 0.0, 1, g, 12);
  for (std::size_t n = 0; n < s.terms.size(); ++n) {
    CHECK(s.terms[n].minCoeff() >= 0.0);
    if (n > 0) CHECK((s.partial_sums[n] - s.partial_sums[n - 1]).minCoeff() >= 0.0);
  }
}

TEST_CASE("boundary and identity") {
  const RateKernel k = two_state(1.0, 2.0);
  const RowVector r = minimal_transition_row(k, 0.3, 1, 0.3, 1e-3);
  CHECK(r(0) == 0.0);
  CHECK(r(1) == 1.0);
  const RateKernel z = zero_kernel();
  const TransitionTable t = minimal_transition(z, 0.0, 0, TimeGrid(0.0, 3.0, 1e-2));
  CHECK(t.from(0).values.col(0).minCoeff() == 1.0);
  const TransitionTable o = ode_oracle(z, 0.0, 0, TimeGrid(0.0, 3.0, 1e-2));
  CHECK(o.from(0).values.col(0).minCoeff() == 1.0);
}

TEST_CASE("two-state hand value") {
  const RateKernel k = two_state(1.0, 2.0);
  const Real want = 2.0 / 3.0 + std::exp(-3.0) / 3.0;
  CHECK(minimal_transition_row(k, 0.0, 0, 1.0, 1e-3)(0) == doctest::Approx(want).epsilon(1e-6));
  const TransitionTable o = ode_oracle(k, 0.0, 0, TimeGrid(0.0, 1.0, 1e-3));
  CHECK(o.from(0).values(o.from(0).values.rows() - 1, 0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("term recursion agrees with the matrix exponential") {
  for (std::uint64_t seed : {101u, 202u, 303u, 404u}) {
    const Matrix q = random_generator(seed, 5);
    const RateKernel k = RateKernel::constant(numbered(5), TimeWindow{}, q);
    const TimeGrid g(0.0, 5.0, 1e-3);
    const std::vector<Index> starts{0, 1, 2, 3, 4};
    const TransitionTable a = minimal_transition(k, 0.0, starts, g);
    for (Real t : {0.1, 1.0, 5.0}) {
      const Matrix e = (q * t).exp();
      const long n = g.find(t);
      REQUIRE(n >= 0);
      for (Index x : starts)
        CHECK((a.from(x).values.row(n) - e.row(x)).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("oscillator against the oracle and the closed form") {
  const RateKernel osc = fms_oscillator(20);
  const Index zero = osc.space().index_of("0");
  TransitionOptions opts;
  for (int j = -8; j <= 8; ++j) opts.monitored.push_back(osc.space().index_of(std::to_string(j)));
  const TimeGrid g(0.0, 1.0, 1e-3);
  const TransitionTable a = minimal_transition(osc, 0.0, zero, g, opts);
  const Index last = static_cast<Index>(g.size() - 1);
  CHECK(a.from(zero).values(last, zero) == doctest::Approx(std::exp(-1.0)).epsilon(1e-5));
  for (int j = 1; j <= 8; ++j) {
    const Real want = (1.0 - std::exp(-1.0)) / std::ldexp(1.0, j + 1);
    CHECK(std::abs(a.from(zero).values(last, osc.space().index_of(std::to_string(j))) - want) < 1e-5);
    CHECK(std::abs(a.from(zero).values(last, osc.space().index_of(std::to_string(-j))) - want) < 1e-5);
  }
  const TransitionTable o = ode_oracle(osc, 0.0, zero, g);
  for (Index y : opts.monitored) CHECK(std::abs(a.from(zero).values(last, y) - o.from(zero).values(last, y)) < 1e-5);
}

TEST_CASE("piecewise kernels against the oracle") {
  const TimeGrid probe(0.0, 1.5, 1e-3);
  SUBCASE("moderate switch") {
    const RateKernel k = switching(10.0);
    const TimeGrid g = TimeGrid::for_kernel(k, 0.0, 1.5, 1e-3);
    CHECK(max_diff(minimal_transition(k, 0.0, 0, g), ode_oracle(k, 0.0, 0, g), 0) < 5e-6);
  }
  SUBCASE("stiff switch") {
    for (Real fast : {1e3, 1e6, 1e9}) {
      const RateKernel k = switching(fast);
      const TimeGrid g = TimeGrid::for_kernel(k, 0.0, 1.5, 1e-3);
      const TransitionTable a = minimal_transition(k, 0.0, 0, g);
      CHECK(max_diff(a, ode_oracle(k, 0.0, 0, g), 0) < 1e-4);
      CHECK(a.from(0).mass_defect.cwiseAbs().maxCoeff() < 1e-4);
    }
  }
  SUBCASE("breakpoints become grid nodes") {
    const RateKernel k = switching(2.0);
    const TimeGrid g = TimeGrid::for_kernel(k, 0.0, 1.5, 0.3);
    CHECK(g.find(0.5) >= 0);
    CHECK(g.find(0.8) >= 0);
  }
}

TEST_CASE("Chapman-Kolmogorov") {
  const RateKernel k = two_state(1.0, 2.0);
  const std::vector<Index> all{0, 1};
  SUBCASE("oracle tables") {
    const TransitionTable from0 = ode_oracle(k, 0.0, all, TimeGrid(0.0, 1.0, 1e-3));
    const TransitionTable from_s = ode_oracle(k, 0.5, all, TimeGrid(0.5, 1.0, 1e-3));
    for (Index x : all) CHECK(chapman_kolmogorov_residual(k, from0, x, from_s, 0.5, 1.0, all) < 1e-8);
  }
  SUBCASE("term-sum tables") {
    const TransitionTable from0 = minimal_transition(k, 0.0, all, TimeGrid(0.0, 1.0, 1e-3));
    const TransitionTable from_s = minimal_transition(k, 0.5, all, TimeGrid(0.5, 1.0, 1e-3));
    for (Index x : all) CHECK(chapman_kolmogorov_residual(k, from0, x, from_s, 0.5, 1.0, all) < 1e-6);
  }
  SUBCASE("zero kernel") {
    const RateKernel z = zero_kernel();
    const std::vector<Index> one{0};
    const TransitionTable a = minimal_transition(z, 0.0, one, TimeGrid(0.0, 1.0, 1e-2));
    const TransitionTable b = minimal_transition(z, 0.5, one, TimeGrid(0.5, 1.0, 1e-2));
    CHECK(chapman_kolmogorov_residual(z, a, 0, b, 0.5, 1.0, one) == 0.0);
  }
  SUBCASE("missing rows are named") {
    const TransitionTable from0 = minimal_transition(k, 0.0, all, TimeGrid(0.0, 1.0, 1e-3));
    const TransitionTable only0 = minimal_transition(k, 0.5, 0, TimeGrid(0.5, 1.0, 1e-3));
    CHECK_THROWS_AS(chapman_kolmogorov_residual(k, from0, 0, only0, 0.5, 1.0, all), MissingRowsError);
  }
}

TEST_CASE("explosion leaves a mass defect") {
  const RateKernel k = pure_birth(2.0, 40);
  const TransitionTable t = minimal_transition(k, 0.0, 1, TimeGrid(0.0, 1.0, 1e-3));
  CHECK(t.from(1).mass_defect(t.from(1).mass_defect.size() - 1) > 0.1);
  CHECK(t.from(1).values.minCoeff() >= 0.0);

  const RateKernel b = two_state(1.0, 2.0);
  const TransitionTable r = minimal_transition(b, 0.0, 0, TimeGrid(0.0, 3.0, 1e-3));
  CHECK(r.from(0).mass_defect.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("truncation is monotone") {
  const SweepResult s = truncation_sweep("pure-birth", {{"b", 2.0}}, "N", {10, 20, 40}, 0.0, "1", 1.0, 1e-3,
                                         {"1", "2", "5", "9"});
  REQUIRE(s.kept_mass.size() == 3);
  CHECK(s.max_violation <= 1e-9);
  CHECK(s.kept_mass(1) >= s.kept_mass(0) - 1e-9);
  CHECK(s.kept_mass(2) >= s.kept_mass(1) - 1e-9);
}

TEST_CASE("non-convergence returns the partial table") {
  const RateKernel osc = fms_oscillator(12);
  TransitionOptions opts;
  opts.max_terms = 5;
  try {
    minimal_transition(osc, 0.0, osc.space().index_of("0"), TimeGrid(0.0, 1.0, 1e-2), opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.tail() > opts.tol);
    CHECK(e.partial().has(osc.space().index_of("0")));
  }
}

TEST_CASE("grid step halves the error") {
  const Matrix q = random_generator(9, 4);
  const RateKernel k = RateKernel::constant(numbered(4), TimeWindow{}, q);
  const Real want = (q * 1.0).exp()(0, 3);
  const Real e1 = std::abs(minimal_transition_row(k, 0.0, 0, 1.0, 2e-2)(3) - want);
  const Real e2 = std::abs(minimal_transition_row(k, 0.0, 0, 1.0, 1e-2)(3) - want);
  CHECK(e2 < e1);
  CHECK(e2 < 1e-4);
}

}
