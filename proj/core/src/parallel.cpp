#include "sosmap/parallel.hpp"

#include <algorithm>

namespace sosmap {

namespace {
std::atomic<unsigned> g_max_threads{0};
}

void set_max_threads(unsigned n) { g_max_threads.store(n); }

unsigned max_threads() {
  const unsigned n = g_max_threads.load();
  if (n != 0) return n;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace detail {
unsigned effective_threads(std::size_t n_blocks) {
  return static_cast<unsigned>(
      std::min<std::size_t>(max_threads(), std::max<std::size_t>(n_blocks, 1)));
}
}  // namespace detail

}  // namespace sosmap
