#include "ssmp/parallel.hpp"

namespace ssmp {

namespace {
std::atomic<unsigned> g_jobs{0};
}

unsigned default_jobs() noexcept {
  const unsigned j = g_jobs.load();
  if (j != 0) return j;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void set_default_jobs(unsigned jobs) noexcept { g_jobs.store(jobs); }

}  // namespace ssmp
