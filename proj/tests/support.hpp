#ifndef MJP_TESTS_SUPPORT_HPP
#define MJP_TESTS_SUPPORT_HPP

#include "mjp/qkernel.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace mjp::testing {

// Composite Simpson rule, n even.
inline Real simpson(const std::function<Real(Real)>& f, Real a, Real b, int n = 2000) {
  const Real h = (b - a) / n;
  Real s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline StateSpace labels(std::initializer_list<const char*> names) {
  StateSpace s;
  for (const char* n : names) s.labels.emplace_back(n);
  return s;
}

inline RateKernel zero_kernel() {
  return RateKernel::constant(labels({"0"}), TimeWindow{}, Matrix::Zero(1, 1));
}

// Conservative n x n generator, rates uniform on (0, scale), about 30% zeros.
inline Matrix random_generator(std::uint64_t seed, Index n, Real scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  Matrix q = Matrix::Zero(n, n);
  for (Index x = 0; x < n; ++x) {
    for (Index y = 0; y < n; ++y)
      if (x != y && u(rng) > 0.3) q(x, y) = scale * u(rng);
    q(x, x) = -q.row(x).sum();
  }
  return q;
}

inline StateSpace numbered(Index n) {
  StateSpace s;
  for (Index i = 0; i < n; ++i) s.labels.push_back(std::to_string(i));
  return s;
}

}  // namespace mjp::testing

#endif
