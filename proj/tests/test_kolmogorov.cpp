#include "doctest.h"
#include "support.hpp"

#include "mjp/errors.hpp"
#include "mjp/generators.hpp"
#include "mjp/kolmogorov.hpp"

#include <vector>

using namespace mjp;
using namespace mjp::testing;

TEST_SUITE("kolmogorov") {

TEST_CASE("zero kernel solves both equations") {
  const RateKernel z = zero_kernel();
  const std::vector<Index> set{0}, starts{0};
  const BackwardSlices s = backward_slices(z, 0.0, 1.0, 1e-2, set);
  CHECK(backward_residual(z, s, starts).max() < 1e-12);
  const TransitionTable t = minimal_transition(z, 0.0, 0, TimeGrid(0.0, 1.0, 1e-2));
  CHECK(forward_residual(z, t, 0, set, 1.0).max() < 1e-12);
  CHECK(forward_integral_check(z, t, 0, set, 1.0).max() < 1e-12);
}

TEST_CASE("backward equation on the two-state oracle") {
  const RateKernel k = two_state(1.0, 2.0);
  const std::vector<Index> starts{0, 1};
  for (Index b : {0, 1}) {
    const BackwardSlices s = backward_slices_oracle(k, 0.0, 1.0, 1e-3, {b});
    CHECK(backward_residual(k, s, starts).max() <= 1e-5);
  }
}

TEST_CASE("term-sum slices satisfy both equations") {
  const RateKernel k = two_state(1.0, 2.0);
  const std::vector<Index> starts{0, 1};
  for (Index b : {0, 1}) {
    const std::vector<Index> set{b};
    const BackwardSlices s = backward_slices(k, 0.0, 1.0, 1e-3, set);
    CHECK(backward_residual(k, s, starts).passed());
    CHECK(backward_integral_check(k, s, starts).max() <= 1e-6);
    for (Index x : starts) {
      const TransitionTable t = minimal_transition(k, 0.0, x, TimeGrid(0.0, 1.0, 1e-3));
      CHECK(forward_residual(k, t, x, set, 1.0).passed());
      CHECK(forward_integral_check(k, t, x, set, 1.0).max() <= 1e-6);
    }
  }
}

TEST_CASE("a halved solution is rejected") {
  const RateKernel k = two_state(1.0, 2.0);
  const std::vector<Index> starts{0};
  const BackwardSlices s = scaled(backward_slices(k, 0.0, 1.0, 1e-3, {0}), 0.5);
  CHECK(backward_integral_check(k, s, starts).max() > 0.1);
  const TransitionTable t = minimal_transition(k, 0.0, 0, TimeGrid(0.0, 1.0, 1e-3)).scaled(0.5);
  const std::vector<Index> set{0};
  CHECK(forward_integral_check(k, t, 0, set, 1.0).max() > 0.1);
}

TEST_CASE("forward equation guard") {
  const RateKernel osc = fms_oscillator(10);
  std::vector<Index> all(static_cast<std::size_t>(osc.size()));
  for (Index i = 0; i < osc.size(); ++i) all[i] = i;
  CHECK_THROWS_AS(forward_guard(osc, all, 1.0), GuardError);
  const Index zero = osc.space().index_of("0");
  const std::vector<Index> single{zero};
  CHECK_NOTHROW(forward_guard(osc, single, 1.0));

  TransitionOptions opts;
  for (int j = -6; j <= 6; ++j) opts.monitored.push_back(osc.space().index_of(std::to_string(j)));
  const TransitionTable t = minimal_transition(osc, 0.0, zero, TimeGrid(0.0, 1.0, 1e-3), opts);
  CHECK_THROWS_AS(forward_residual(osc, t, zero, all, 1.0), GuardError);
  CHECK(forward_residual(osc, t, zero, single, 1.0).passed());
}

TEST_CASE("forward integral holds with a mass defect") {
  const RateKernel k = pure_birth(2.0, 40);
  const TransitionTable t = minimal_transition(k, 0.0, 1, TimeGrid(0.0, 1.0, 1e-3));
  REQUIRE(t.from(1).mass_defect(t.from(1).mass_defect.size() - 1) > 0.1);
  for (Index b : {1, 2, 5}) {
    const std::vector<Index> set{b};
    CHECK(forward_integral_check(k, t, 1, set, 1.0).max() <= 1e-5);
  }
}

}
