#ifndef PDMP_RANDOM_HPP
#define PDMP_RANDOM_HPP

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace pdmp {

using Rng = std::mt19937_64;

/// Independent generator for path `index` of a run seeded with `seed`.
/// Streams depend only on (seed, index), so results do not depend on how
/// paths are scheduled across workers.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double standard_exponential(Rng& rng) {
  return std::exponential_distribution<double>(1.0)(rng);
}

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// executed exactly once; callers write into per-index slots so the merged
/// result is independent of scheduling. The first exception (lowest index) is
/// rethrown after all workers finish.
inline void parallel_for(std::size_t count, unsigned workers,
                         const std::function<void(std::size_t)>& body) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace pdmp

#endif  // PDMP_RANDOM_HPP
