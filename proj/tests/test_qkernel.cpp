#include "doctest.h"
#include "support.hpp"

#include "mjp/errors.hpp"
#include "mjp/generators.hpp"

#include <vector>

using namespace mjp;
using namespace mjp::testing;

TEST_SUITE("qkernel") {

TEST_CASE("total rates read from each representation") {
  const RateKernel two = two_state(1.0, 2.0);
  CHECK(two.total_rate(0, 0.5) == 1.0);
  CHECK(two.total_rate(1, 0.5) == 2.0);

  const RateKernel osc = fms_oscillator(8);
  CHECK(osc.total_rate(osc.space().index_of("3"), 0.7) == doctest::Approx(8.0));
  CHECK(osc.total_rate(osc.space().index_of("-3"), 0.0) == doctest::Approx(8.0));
  CHECK(osc.total_rate(osc.space().index_of("0"), 0.0) == doctest::Approx(1.0));

  const RateKernel zero = zero_kernel();
  for (Real t : {0.0, 1.0, 100.0}) CHECK(zero.total_rate(0, t) == 0.0);
}

TEST_CASE("jump measure of the oscillator from 0") {
  const RateKernel osc = fms_oscillator(8);
  const Index zero = osc.space().index_of("0");
  const std::vector<Index> two{osc.space().index_of("2")};
  CHECK(osc.jump_measure(zero, 0.3, two) == doctest::Approx(0.125));
  const std::vector<Index> self{zero};
  CHECK(osc.jump_measure(zero, 0.3, self) == 0.0);
  std::vector<Index> all(static_cast<std::size_t>(osc.size()));
  for (Index i = 0; i < osc.size(); ++i) all[i] = i;
  CHECK(osc.jump_measure(zero, 0.3, all) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rows are conservative") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const RateKernel k = RateKernel::constant(numbered(6), TimeWindow{}, random_generator(seed, 6, 5.0));
    const Matrix q = k.matrix_at(0.0);
    for (Index x = 0; x < q.rows(); ++x) {
      CHECK(std::abs(q.row(x).sum()) < 1e-12);
      for (Index y = 0; y < q.cols(); ++y)
        if (x != y) CHECK(q(x, y) >= 0.0);
    }
  }
  const RateKernel osc = fms_oscillator(6);
  for (Real t : {0.0, 0.5}) {
    const Matrix q = osc.matrix_at(t);
    for (Index x = 0; x < q.rows(); ++x) CHECK(std::abs(q.row(x).sum()) < 1e-9);
  }
}

TEST_CASE("invalid rate matrices are rejected") {
  Matrix q(2, 2);
  q << -1.0, 1.0, -0.5, 0.5;
  CHECK_THROWS_AS(RateKernel::constant(numbered(2), TimeWindow{}, q), ValidationError);
  Matrix r(2, 2);
  r << -1.0, 0.5, 1.0, -1.0;
  CHECK_THROWS_AS(RateKernel::constant(numbered(2), TimeWindow{}, r), ValidationError);
  CHECK_THROWS(RateKernel::constant(numbered(2), TimeWindow{1.0, 0.5}, Matrix::Zero(2, 2)));
}

TEST_CASE("piecewise kernels are right-continuous at breakpoints") {
  Matrix a(2, 2), b(2, 2);
  a << -1, 1, 0, 0;
  b << -3, 3, 0, 0;
  const RateKernel k = RateKernel::piecewise(numbered(2), TimeWindow{}, {0.0, 1.0}, {a, b});
  CHECK(k.total_rate(0, 0.999) == 1.0);
  CHECK(k.total_rate(0, 1.0) == 3.0);
  CHECK(k.matrix_left(1.0)(0, 1) == 1.0);
}

TEST_CASE("make_conservative routes deficiencies to an absorbing state") {
  SUBCASE("already conservative") {
    const Matrix q = random_generator(7, 3);
    const RateKernel k = make_conservative(numbered(3), TimeWindow{}, q);
    REQUIRE(k.size() == 4);
    const Matrix m = k.matrix_at(0.0);
    CHECK((m.topLeftCorner(3, 3) - q).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m.col(3).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m.row(3).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("full deficiency") {
    const RateKernel k = make_conservative(numbered(1), TimeWindow{}, Matrix::Constant(1, 1, -1.0));
    REQUIRE(k.size() == 2);
    CHECK(k.matrix_at(0.0)(0, 1) == doctest::Approx(1.0));
    CHECK(k.matrix_at(0.0).row(1).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("partial deficiency") {
    Matrix q(2, 2);
    q << -1.25, 1.0, 2.0, -2.0;
    const RateKernel k = make_conservative(numbered(2), TimeWindow{}, q);
    CHECK(k.matrix_at(0.0)(0, 2) == doctest::Approx(0.25));
    CHECK(k.matrix_at(0.0)(1, 2) == doctest::Approx(0.0));
  }
}

TEST_CASE("assumptions of finite constant kernels") {
  const RateKernel k = RateKernel::constant(numbered(5), TimeWindow{}, random_generator(11, 5, 3.0));
  const AssumptionReport r = check_assumptions(k);
  CHECK(r.feller);
  CHECK(r.bounded);
  CHECK(r.locally_bounded);
  CHECK(r.locally_integrable);
}

TEST_CASE("oscillator family is bounded per state but not uniformly") {
  const RateKernel osc = fms_oscillator(10);
  const AssumptionReport r = check_assumptions(osc);
  CHECK(r.feller);
  CHECK_FALSE(r.uniformly_bounded);
  REQUIRE(r.unbounded_witness.has_value());
  REQUIRE_FALSE(r.feller_sets.empty());
  for (const auto& ls : r.feller_sets)
    for (Index x : ls.members) CHECK(r.qbar(x) < ls.level);
}

TEST_CASE("inverse-time kernel is locally bounded but not integrable up to t1") {
  const RateKernel k = inverse_time(1.0, TimeWindow{0.0, 1.0});
  const AssumptionReport r = check_assumptions(k);
  CHECK(r.locally_bounded);
  CHECK(r.locally_integrable);
  for (bool w : r.window_integrable) CHECK_FALSE(w);
  CHECK_FALSE(r.bounded);
  CHECK_FALSE(r.feller);
}

TEST_CASE("assumption reports respect the implication chain") {
  std::vector<RateKernel> kernels;
  kernels.push_back(two_state(1.0, 2.0));
  kernels.push_back(fms_oscillator(6));
  kernels.push_back(pure_birth(2.0, 20));
  kernels.push_back(inverse_time(0.5, TimeWindow{0.0, 2.0}));
  kernels.push_back(zero_kernel());
  for (std::uint64_t s = 1; s <= 5; ++s)
    kernels.push_back(RateKernel::constant(numbered(4), TimeWindow{}, random_generator(s, 4, 10.0)));
  for (const auto& k : kernels) {
    const AssumptionReport r = check_assumptions(k);
    if (r.bounded) {
      CHECK(r.feller);
      CHECK(r.locally_bounded);
    }
    if (r.locally_bounded) CHECK(r.locally_integrable);
  }
}

TEST_CASE("(q,s)-boundedness of oscillator sets") {
  const RateKernel osc = fms_oscillator(10);
  for (int k : {1, 3, 6}) {
    std::vector<Index> set{osc.space().index_of("0")};
    for (int j = 1; j <= k; ++j) {
      set.push_back(osc.space().index_of(std::to_string(j)));
      set.push_back(osc.space().index_of(std::to_string(-j)));
    }
    const QsBound b = is_qs_bounded(osc, set, 1.0);
    CHECK(b.bounded);
    CHECK(b.bound == doctest::Approx(std::ldexp(1.0, k)));
  }
  std::vector<Index> all(static_cast<std::size_t>(osc.size()));
  for (Index i = 0; i < osc.size(); ++i) all[i] = i;
  const QsBound b = is_qs_bounded(osc, all, 1.0);
  CHECK_FALSE(b.bounded);
  CHECK(b.witness.has_value());

  const RateKernel two = two_state(1.0, 2.0);
  const std::vector<Index> both{0, 1};
  CHECK(is_qs_bounded(two, both, 5.0).bounded);
}

}
