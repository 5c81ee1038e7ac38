#ifndef MJP_EXPANSION_HPP
#define MJP_EXPANSION_HPP

#include "mjp/policy.hpp"

namespace mjp {

/// Model with an added start point x': under a' it jumps at rate 1 with
/// destination law gamma, a'' is absorbing everywhere.
struct ExpandedModel {
  MdpModel model;
  Index x_prime = 0;
  Index a_prime = 0;
  Index a_dprime = 0;
  Real u = 0.0;
  Real stay_probability = 0.0;  // exp(-u)
  RowVector gamma;              // over the expanded space
  Index original_states = 0;
  Index original_actions = 0;
};

ExpandedModel expand_with_initial_state(const MdpModel& model,
                                        const RowVector& gamma, Real u);

/// a' at x' before u and a'' from u on; a'' at real states before u; the
/// original policy, shifted by u, afterwards.
class LiftedPolicy : public Policy {
 public:
  LiftedPolicy(const ExpandedModel& expanded, const Policy& base);
  PolicySegment segment(const History& h, Real s) const override;
  std::string name() const override { return "lifted-" + base_->name(); }

 private:
  ActionVector unit(Index a) const;
  ActionVector widen(const ActionVector& p) const;

  const ExpandedModel* ex_;
  const Policy* base_;
};

}  // namespace mjp

#endif  // MJP_EXPANSION_HPP
