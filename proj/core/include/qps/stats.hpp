#pragma once

#include <atomic>
#include <cstdint>

namespace qps::stats {

// Global counter of Bessel/Hankel evaluations. Every kernel entry goes
// through exactly one evaluation per wave number, so this measures the
// cost of matrix (re)assembly across precompute and update paths.
inline std::atomic<std::uint64_t> kernel_evals{0};

inline void reset_kernel_evals() { kernel_evals.store(0, std::memory_order_relaxed); }
inline std::uint64_t kernel_eval_count() { return kernel_evals.load(std::memory_order_relaxed); }
inline void count_kernel_eval() { kernel_evals.fetch_add(1, std::memory_order_relaxed); }

}  // namespace qps::stats
