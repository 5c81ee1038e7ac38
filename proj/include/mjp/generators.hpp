#ifndef MJP_GENERATORS_HPP
#define MJP_GENERATORS_HPP

#include "mjp/qkernel.hpp"

#include <map>
#include <string>

namespace mjp {

/// Oscillating chain on {0, +-1, ..., +-J}: state 0 leaves at rate 1 and
/// lands on j != 0 with probability 2^-(|j|+1); j and -j exchange at rate
/// 2^|j|. Mass bound for |j| > J goes to the overflow state.
/// Labels are ordered "0", "1", "-1", "2", "-2", ..., "overflow".
RateKernel fms_oscillator(int J, TimeWindow window = {});

/// Pure birth chain on {0, ..., N-1}: n -> n+1 at rate b^n; state N-1 feeds
/// the overflow state.
RateKernel pure_birth(Real base, int N, TimeWindow window = {});

/// Two states, 0 -> 1 at rate lambda and 1 -> 0 at rate mu.
RateKernel two_state(Real lambda, Real mu, TimeWindow window = {});

/// Two states exchanging at rate c / (t1 - t); needs a finite t1. Locally
/// bounded but not integrable up to t1.
RateKernel inverse_time(Real c, TimeWindow window);

/// Dispatch by name: "fms-oscillator" (J), "pure-birth" (b, N),
/// "two-state" (lambda, mu), "inverse-time" (c).
RateKernel make_generator(const std::string& name,
                          const std::map<std::string, Real>& params,
                          TimeWindow window);

}  // namespace mjp

#endif  // MJP_GENERATORS_HPP
