#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace ridgekit {

/// Thread budget for embarrassingly parallel grid cells. Controlled by the
/// RIDGEKIT_THREADS environment variable; 0 or unset means auto.
inline unsigned thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("RIDGEKIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return hw;
}

/// Runs body(i) for i in [0, count). Each index must be independent and write
/// only its own output slot, which makes the merged result identical to a
/// sequential loop regardless of the thread count.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(thread_budget(), count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += threads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ridgekit
