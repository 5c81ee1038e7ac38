#include "mjp/generators.hpp"

#include <cmath>

namespace mjp {

namespace {

Real param(const std::map<std::string, Real>& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end())
    throw ValidationError("generator parameter '" + key + "' missing");
  return it->second;
}

int int_param(const std::map<std::string, Real>& p, const std::string& key) {
  const Real v = param(p, key);
  if (v != std::floor(v) || v < 1.0)
    throw ValidationError("generator parameter '" + key +
                          "' must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace

RateKernel fms_oscillator(int J, TimeWindow window) {
  if (J < 1) throw ValidationError("fms-oscillator needs J >= 1");
  StateSpace space;
  space.labels.push_back("0");
  for (int j = 1; j <= J; ++j) {
    space.labels.push_back(std::to_string(j));
    space.labels.push_back(std::to_string(-j));
  }
  space.labels.push_back("overflow");
  space.overflow = static_cast<Index>(space.labels.size()) - 1;
  const Index n = space.size();

  GeneratorSpec spec;
  spec.name = "fms-oscillator";
  spec.params = {{"J", static_cast<Real>(J)}};
  spec.homogeneous = true;
  spec.rates = [J, n](Real) {
    Matrix q = Matrix::Zero(n, n);
    q(0, 0) = -1.0;
    for (int j = 1; j <= J; ++j) {
      const Index pos = 2 * j - 1;
      const Index neg = 2 * j;
      const Real to_j = std::ldexp(1.0, -(j + 1));
      q(0, pos) = to_j;
      q(0, neg) = to_j;
      const Real r = std::ldexp(1.0, j);
      q(pos, neg) = r;
      q(pos, pos) = -r;
      q(neg, pos) = r;
      q(neg, neg) = -r;
    }
    // sum over |j| > J of 2 * 2^-(|j|+1)
    q(0, n - 1) = std::ldexp(1.0, -J);
    return q;
  };
  auto k = RateKernel::generator(std::move(space), window, std::move(spec));
  k.set_overflow_rate_sup(kInf);
  return k;
}

RateKernel pure_birth(Real base, int N, TimeWindow window) {
  if (N < 1) throw ValidationError("pure-birth needs N >= 1");
  if (!(base > 0.0)) throw ValidationError("pure-birth needs b > 0");
  StateSpace space;
  for (int i = 0; i < N; ++i) space.labels.push_back(std::to_string(i));
  space.labels.push_back("overflow");
  space.overflow = N;
  const Index n = space.size();

  GeneratorSpec spec;
  spec.name = "pure-birth";
  spec.params = {{"b", base}, {"N", static_cast<Real>(N)}};
  spec.rates = [base, n](Real) {
    Matrix q = Matrix::Zero(n, n);
    for (Index i = 0; i + 1 < n; ++i) {
      const Real r = std::pow(base, static_cast<Real>(i));
      q(i, i) = -r;
      q(i, i + 1) = r;
    }
    return q;
  };
  auto k = RateKernel::generator(std::move(space), window, std::move(spec));
  k.set_overflow_rate_sup(base > 1.0 ? kInf : std::pow(base, N));
  return k;
}

RateKernel two_state(Real lambda, Real mu, TimeWindow window) {
  if (lambda < 0.0 || mu < 0.0)
    throw ValidationError("two-state rates must be >= 0");
  StateSpace space{{"0", "1"}, std::nullopt, std::nullopt};
  GeneratorSpec spec;
  spec.name = "two-state";
  spec.params = {{"lambda", lambda}, {"mu", mu}};
  spec.rates = [lambda, mu](Real) {
    Matrix q(2, 2);
    q << -lambda, lambda, mu, -mu;
    return q;
  };
  return RateKernel::generator(std::move(space), window, std::move(spec));
}

RateKernel inverse_time(Real c, TimeWindow window) {
  if (!std::isfinite(window.t1))
    throw ValidationError("inverse-time needs a finite t1");
  if (!(c > 0.0)) throw ValidationError("inverse-time needs c > 0");
  StateSpace space{{"0", "1"}, std::nullopt, std::nullopt};
  const Real t1 = window.t1;
  GeneratorSpec spec;
  spec.name = "inverse-time";
  spec.params = {{"c", c}};
  spec.homogeneous = false;
  spec.rates = [c, t1](Real t) {
    const Real r = c / (t1 - t);
    Matrix q(2, 2);
    q << -r, r, r, -r;
    return q;
  };
  spec.qbar = Vector::Constant(2, kInf);
  spec.locally_bounded = true;
  spec.window_integral = Vector::Constant(2, kInf);
  spec.majorant = [c, t1](Index, Real, Real b) {
    return b >= t1 ? kInf : c / (t1 - b);
  };
  return RateKernel::generator(std::move(space), window, std::move(spec));
}

RateKernel make_generator(const std::string& name,
                          const std::map<std::string, Real>& params,
                          TimeWindow window) {
  if (name == "fms-oscillator") return fms_oscillator(int_param(params, "J"), window);
  if (name == "pure-birth")
    return pure_birth(param(params, "b"), int_param(params, "N"), window);
  if (name == "two-state")
    return two_state(param(params, "lambda"), param(params, "mu"), window);
  if (name == "inverse-time") return inverse_time(param(params, "c"), window);
  throw ValidationError("unknown generator '" + name + "'");
}

}  // namespace mjp
