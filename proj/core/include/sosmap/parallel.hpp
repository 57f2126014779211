#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <utility>
#include <vector>

namespace sosmap {

// Process-wide cap on worker threads. 0 (default) means
// std::thread::hardware_concurrency(). All parallel helpers below are
// bit-deterministic for any cap: work is split into fixed-size blocks that
// do not depend on the thread count, and reductions fold block results in
// block order.
void set_max_threads(unsigned n);
unsigned max_threads();

namespace detail {
unsigned effective_threads(std::size_t n_blocks);
}

// Runs body(begin, end) over a partition of [0, n) into blocks of
// `block_size`. Bodies must only write to disjoint, index-derived locations.
template <class Body>
void parallel_for(std::size_t n, std::size_t block_size, Body&& body) {
  if (n == 0) return;
  const std::size_t n_blocks = (n + block_size - 1) / block_size;
  const unsigned workers = detail::effective_threads(n_blocks);
  if (workers <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      const std::size_t begin = b * block_size;
      const std::size_t end = begin + block_size < n ? begin + block_size : n;
      body(begin, end);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 0; t + 1 < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
}

// Deterministic map/reduce: partial results are produced per fixed-size
// block and folded in block order, so the result is bit-identical at any
// thread count. `map(begin, end, partial)` accumulates into a fresh partial
// (copy of `init`); `fold(acc, partial)` combines.
template <class Partial, class Map, class Fold>
Partial block_reduce(std::size_t n, std::size_t block_size, const Partial& init,
                     Map&& map, Fold&& fold) {
  Partial acc = init;
  if (n == 0) return acc;
  const std::size_t n_blocks = (n + block_size - 1) / block_size;
  const unsigned workers = detail::effective_threads(n_blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) {
      Partial part = init;
      const std::size_t begin = b * block_size;
      const std::size_t end = begin + block_size < n ? begin + block_size : n;
      map(begin, end, part);
      fold(acc, part);
    }
    return acc;
  }
  std::vector<Partial> partials(n_blocks, init);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      const std::size_t begin = b * block_size;
      const std::size_t end = begin + block_size < n ? begin + block_size : n;
      map(begin, end, partials[b]);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 0; t + 1 < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  for (std::size_t b = 0; b < n_blocks; ++b) fold(acc, partials[b]);
  return acc;
}

}  // namespace sosmap
