#include "doctest.h"
#include "support.hpp"

#include "mjp/generators.hpp"
#include "mjp/simulate.hpp"
#include "mjp/transition.hpp"

#include <cmath>
#include <vector>

using namespace mjp;
using namespace mjp::testing;

namespace {

bool same(const PathRecord& a, const PathRecord& b) {
  if (a.x0 != b.x0 || a.status != b.status || a.end_time != b.end_time || a.n_jumps != b.n_jumps ||
      a.jumps.size() != b.jumps.size())
    return false;
  for (std::size_t i = 0; i < a.jumps.size(); ++i)
    if (a.jumps[i].t != b.jumps[i].t || a.jumps[i].x != b.jumps[i].x) return false;
  return true;
}

struct Sum {
  double s = 0.0;
  std::size_t n = 0;
  void merge(const Sum& o) {
    s += o.s;
    n += o.n;
  }
};

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("a state without exits is censored") {
  const RateKernel z = zero_kernel();
  SimConfig cfg;
  cfg.horizon = 3.0;
  Rng rng(1, 0);
  for (int i = 0; i < 10; ++i) {
    const PathRecord p = sample_path(z, 0, cfg, rng);
    CHECK(p.jumps.empty());
    CHECK(p.status == PathStatus::censored_at_horizon);
    CHECK(p.final_state == 0);
  }
  const HoldingTime h = sample_holding_time(z, 0, 0.0, 3.0, rng);
  CHECK(h.censored);
}

TEST_CASE("exponential holding times") {
  const RateKernel k = two_state(1.0, 2.0);
  Rng rng(42, 0);
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const HoldingTime h = sample_holding_time(k, 0, 0.0, 1e9, rng);
    REQUIRE_FALSE(h.censored);
    s += h.tau;
    s2 += h.tau * h.tau;
  }
  const double mean = s / n;
  CHECK(std::abs(mean - 1.0) < 0.01);
  CHECK(std::abs(s2 / n - 2.0) < 0.05);
}

TEST_CASE("hazard inversion across a breakpoint") {
  Matrix a(2, 2), b(2, 2);
  a << 0, 0, 0, 0;
  b << -2, 2, 0, 0;
  const RateKernel k = RateKernel::piecewise(numbered(2), TimeWindow{}, {0.0, 1.0}, {a, b});
  Rng rng(7, 0);
  const int n = 100000;
  int beyond = 0;
  for (int i = 0; i < n; ++i) {
    const HoldingTime h = sample_holding_time(k, 0, 0.0, 100.0, rng);
    REQUIRE_FALSE(h.censored);
    CHECK(h.tau >= 1.0);
    if (h.tau > 1.5) ++beyond;
  }
  const double p = static_cast<double>(beyond) / n, want = std::exp(-1.0);
  CHECK(std::abs(p - want) <= 3.0 * std::sqrt(want * (1 - want) / n));
}

TEST_CASE("time-varying generator by thinning") {
  const RateKernel k = inverse_time(1.0, TimeWindow{0.0, 1.0});
  Rng rng(3, 0);
  const int n = 50000;
  int jumped = 0;
  for (int i = 0; i < n; ++i)
    if (!sample_holding_time(k, 0, 0.0, 0.5, rng).censored) ++jumped;
  // P(tau <= 1/2) = 1 - exp(-int_0^{1/2} dt / (1 - t)) = 1/2
  const double p = static_cast<double>(jumped) / n;
  CHECK(std::abs(p - 0.5) <= 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("same seed gives identical paths") {
  const RateKernel k = fms_oscillator(8);
  SimConfig cfg;
  cfg.horizon = 1.0;
  Rng a(99, 4), b(99, 4), c(100, 4);
  bool differs = false;
  for (int i = 0; i < 200; ++i) {
    const PathRecord p = sample_path(k, 0, cfg, a), q = sample_path(k, 0, cfg, b), r = sample_path(k, 0, cfg, c);
    CHECK(same(p, q));
    differs |= !same(p, r);
  }
  CHECK(differs);
}

TEST_CASE("chunked runs do not depend on the thread count") {
  auto work = [](std::size_t chunk, std::size_t begin, std::size_t end) {
    Rng rng(5, chunk);
    Sum s;
    for (std::size_t i = begin; i < end; ++i) {
      s.s += rng.uniform();
      ++s.n;
    }
    return s;
  };
  const Sum one = run_chunks<Sum>(10000, work, 1);
  const Sum four = run_chunks<Sum>(10000, work, 4);
  CHECK(one.n == 10000);
  CHECK(one.s == four.s);
}

TEST_CASE("simulated transition agrees with the term sum") {
  const RateKernel k = two_state(1.0, 2.0);
  SimConfig cfg;
  cfg.seed = 11;
  cfg.horizon = 1.0;
  cfg.replications = 100000;
  const EmpiricalTransition e = simulate_transition(k, 0, cfg);
  const RowVector p = minimal_transition_row(k, 0.0, 0, 1.0, 1e-3);
  for (Index y : {0, 1}) CHECK(std::abs(e.estimate(y) - p(y)) <= 3.0 * e.std_error(y) + 1e-12);
  CHECK(e.defect == 0.0);
}

TEST_CASE("pure-birth defect matches the transition module") {
  const RateKernel k = pure_birth(2.0, 40);
  SimConfig cfg;
  cfg.seed = 12;
  cfg.horizon = 1.0;
  cfg.replications = 100000;
  cfg.max_jumps = 60;
  const EmpiricalTransition e = simulate_transition(k, 1, cfg);
  const TransitionTable t = minimal_transition(k, 0.0, 1, TimeGrid(0.0, 1.0, 1e-3));
  const Real d = t.from(1).mass_defect(t.from(1).mass_defect.size() - 1);
  CHECK(std::abs(e.defect - d) <= 3.0 * e.defect_se + 2e-3);
  Real kept = 0.0;
  for (Index y : k.space().real_states()) kept += e.estimate(y);
  CHECK(std::abs(1.0 - kept - e.defect) < 1e-9);
}

TEST_CASE("explosion fraction settles as max_jumps grows") {
  const RateKernel k = pure_birth(2.0, 200);
  SimConfig cfg;
  cfg.seed = 13;
  cfg.horizon = 1.0;
  cfg.record_jumps = false;
  std::vector<double> frac;
  for (std::size_t mj : {20u, 40u, 60u}) {
    cfg.max_jumps = mj;
    Rng rng(cfg.seed, 0);
    int exploded = 0;
    for (int i = 0; i < 20000; ++i)
      if (sample_path(k, 1, cfg, rng).status == PathStatus::exploded) ++exploded;
    frac.push_back(exploded / 20000.0);
  }
  CHECK(frac[0] + 0.01 >= frac[1]);
  CHECK(std::abs(frac[1] - frac[2]) < 0.01);
}

TEST_CASE("empirical transition from recorded paths") {
  const RateKernel k = two_state(1.0, 2.0);
  SimConfig cfg;
  cfg.horizon = 2.0;
  Rng rng(21, 0);
  std::vector<PathRecord> paths;
  for (int i = 0; i < 20000; ++i) paths.push_back(sample_path(k, 0, cfg, rng));
  const EmpiricalTransition e = empirical_transition(paths, k.space(), 0, 1.0);
  const RowVector p = minimal_transition_row(k, 0.0, 0, 1.0, 1e-3);
  CHECK(std::abs(e.estimate(1) - p(1)) <= 3.0 * e.std_error(1));
  const EmpiricalTransition none = empirical_transition(paths, k.space(), 1, 1.0);
  CHECK_FALSE(none.defined());
}

}
