#ifndef MJP_SIMULATE_HPP
#define MJP_SIMULATE_HPP

#include "mjp/qkernel.hpp"

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <thread>
#include <vector>

namespace mjp {

/// Replications are grouped in chunks of this size; each chunk owns one
/// engine seeded from (seed, chunk index), so results do not depend on the
/// number of worker threads.
inline constexpr std::size_t kChunkSize = 256;

class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  /// Uniform on (0, 1), 53-bit resolution.
  Real uniform();
  /// Exp(1).
  Real exponential();
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

enum class PathStatus { censored_at_horizon, absorbed, exploded };
std::string to_string(PathStatus s);

struct Jump {
  Real t;
  Index x;
};

/// Policy mixture in force on [t_start, t_end).
struct ActionMark {
  Real t_start;
  Real t_end;
  Index x;
  ActionVector probs;
};

struct PathRecord {
  Index x0 = 0;
  Real t0 = 0.0;
  std::vector<Jump> jumps;
  PathStatus status = PathStatus::censored_at_horizon;
  Real end_time = 0.0;       // horizon, or time of the last jump when exploded
  Index final_state = 0;     // state at end_time (meaningless when exploded)
  std::size_t n_jumps = 0;   // counted even when jumps are not recorded
  std::vector<ActionMark> marks;

  /// State at time t, or -1 when the path has exploded by t. Needs recorded
  /// jumps unless t is the end time.
  Index state_at(Real t) const;
};

struct SimConfig {
  std::uint64_t seed = 1;
  Real horizon = 1.0;
  std::size_t max_jumps = 1000;
  std::size_t replications = 1;
  bool record_jumps = true;
  void validate() const;
};

struct HoldingTime {
  Real tau;
  bool censored;
};

/// Holding time in state x entered at u, censored at `horizon`. Exact hazard
/// inversion for piecewise kernels, thinning with the declared majorant for
/// time-varying generators.
HoldingTime sample_holding_time(const RateKernel& kernel, Index x, Real u,
                                Real horizon, Rng& rng);

/// Destination of a jump out of x at time t, drawn from q(x,t,.)/q(x,t).
Index sample_destination(const RateKernel& kernel, Index x, Real t, Rng& rng);

PathRecord sample_path(const RateKernel& kernel, Index x0, const SimConfig& cfg,
                       Rng& rng);
/// x0 drawn from gamma.
PathRecord sample_path(const RateKernel& kernel, const RowVector& gamma,
                       const SimConfig& cfg, Rng& rng);

Index sample_index(const RowVector& probs, Rng& rng);

struct EmpiricalTransition {
  Index start = 0;
  std::size_t paths = 0;
  RowVector estimate;  // NaN entries when no path started in `start`
  RowVector std_error;
  Real defect = 0.0;   // exploded or absorbed in a sink
  Real defect_se = 0.0;
  bool defined() const { return paths > 0; }
};

/// Frequencies of X_t among recorded paths starting in x.
EmpiricalTransition empirical_transition(const std::vector<PathRecord>& paths,
                                         const StateSpace& space, Index x, Real t);

/// Streaming variant: simulate `cfg.replications` paths from x with horizon
/// t and count terminal states.
EmpiricalTransition simulate_transition(const RateKernel& kernel, Index x,
                                        const SimConfig& cfg);

struct PathSummary {
  std::size_t paths = 0;
  std::size_t exploded = 0;
  std::size_t censored = 0;
  std::size_t absorbed = 0;
  Real mean_jumps = 0.0;
  Real mean_explosion_time = 0.0;  // last recorded time of exploded paths
};

PathSummary summarize(const std::vector<PathRecord>& paths);

/// Run work(chunk, begin, end) -> Acc for every chunk of `reps` on a pool of
/// threads and merge the results in chunk order with Acc::merge.
template <class Acc, class Work>
Acc run_chunks(std::size_t reps, Work&& work, unsigned threads = 0) {
  const std::size_t chunks = (reps + kChunkSize - 1) / kChunkSize;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(chunks, 1)));
  std::vector<std::optional<Acc>> results(chunks);
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&](unsigned w) {
    try {
      for (std::size_t c = w; c < chunks; c += threads) {
        const std::size_t b = c * kChunkSize;
        results[c].emplace(work(c, b, std::min(reps, b + kChunkSize)));
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  if (threads <= 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  if (chunks == 0) return work(0, 0, 0);
  Acc total = std::move(*results[0]);
  for (std::size_t c = 1; c < chunks; ++c) total.merge(*results[c]);
  return total;
}

}  // namespace mjp

#endif  // MJP_SIMULATE_HPP
