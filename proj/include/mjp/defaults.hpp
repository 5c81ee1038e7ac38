#ifndef MJP_DEFAULTS_HPP
#define MJP_DEFAULTS_HPP

#include "mjp/types.hpp"

#include <cstddef>
#include <cstdint>

/// Defaults shared by the command line and the library entry points. Every
/// report echoes the values actually used.
namespace mjp::defaults {

inline constexpr Real grid_step = 1e-3;
inline constexpr Real term_tol = 1e-7;
inline constexpr int max_terms = 10000;
inline constexpr Real residual_tol = 1e-4;
inline constexpr Real integral_tol = 1e-6;
inline constexpr std::uint64_t seed = 20240601;
inline constexpr std::size_t paths = 10000;
inline constexpr std::size_t max_jumps = 1000;
inline constexpr Real horizon = 1.0;
inline constexpr Real delta = 0.05;
inline constexpr int truncation = 20;
inline constexpr Real z_bound = 3.0;

}  // namespace mjp::defaults

#endif  // MJP_DEFAULTS_HPP
