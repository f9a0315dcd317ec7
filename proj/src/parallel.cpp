#include "grinlens/parallel.hpp"

namespace grinlens {

namespace {
std::atomic<int> g_workers{0};
}

int default_workers() {
  const int n = g_workers.load();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_workers(int n) { g_workers = std::max(0, n); }

}  // namespace grinlens
