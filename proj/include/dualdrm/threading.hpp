#pragma once

#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace dualdrm {

/// Worker count for builds and benchmarks: hardware concurrency, capped by
/// the DUALDRM_THREADS environment variable when set.
inline unsigned thread_budget() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("DUALDRM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && static_cast<unsigned>(v) < n) n = static_cast<unsigned>(v);
  }
  return n;
}

/// Runs fn(begin, end, chunk_index) over contiguous chunks of [0, n).
/// Each chunk must write only to its own output slot; results are therefore
/// identical for any worker count.
template <typename F>
void parallel_chunks(std::size_t n, F&& fn, unsigned workers = thread_budget()) {
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    fn(std::size_t(0), n, std::size_t(0));
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(workers, n);
  const std::size_t per = (n + chunks - 1) / chunks;
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t b = c * per;
    const std::size_t e = std::min(n, b + per);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e, c] { fn(b, e, c); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace dualdrm
