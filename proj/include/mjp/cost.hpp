#ifndef MJP_COST_HPP
#define MJP_COST_HPP

#include "mjp/marginals.hpp"

#include <string>

namespace mjp {

enum class Criterion { infinite_discounted, finite_horizon, infinite_with_jump_costs };

std::string to_string(Criterion c);
Criterion parse_criterion(const std::string& s);

struct CostValue {
  Real value = 0.0;
  Real std_error = 0.0;   // 0 for the exact route
  Real tail_bound = 0.0;  // bound on the part beyond the horizon
  Real horizon = 0.0;
  std::string route;      // "monte_carlo" or "exact"
  std::size_t paths = 0;
};

/// Per-path discounted cost; instant costs use the mixture in force at u_i.
Real path_cost(const PathRecord& p, const CostModel& cost, Criterion c, Real horizon);

/// Monte Carlo route. `horizon` is T for the finite-horizon criterion and the
/// truncation point H for the infinite ones.
CostValue evaluate_cost_mc(const MdpModel& model, const Policy& policy,
                           const RowVector& gamma, const CostModel& cost,
                           Criterion c, Real horizon, const SimConfig& cfg);

/// Quadrature of the Markov policy's exact marginals. Jump costs are not
/// supported on this route.
CostValue evaluate_cost_exact(const MdpModel& model, const MarkovPolicy& policy,
                              const RowVector& gamma, const CostModel& cost,
                              Criterion c, Real horizon, Real h = 1e-3,
                              const TransitionOptions& opts = {});

}  // namespace mjp

#endif  // MJP_COST_HPP
