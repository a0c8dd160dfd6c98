#include "mudest/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace mudest {

int max_threads() {
  if (const char* env = std::getenv("MUD_EST_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
      // fall through to the hardware default on unparsable values
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index, Eigen::Index)>& fn) {
  if (n <= 0) return;
  const Eigen::Index workers = std::min<Eigen::Index>(max_threads(), n);
  if (workers == 1) {
    fn(0, n);
    return;
  }
  const Eigen::Index chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Eigen::Index w = 0; w < workers; ++w) {
    const Eigen::Index begin = w * chunk;
    const Eigen::Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mudest
