#include "modalcur/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace modalcur {

int worker_threads(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* cap = std::getenv("MODALCUR_THREADS")) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(cap, cap + std::strlen(cap), v);
    if (ec == std::errc{} && ptr == cap + std::strlen(cap) && v > 0 && v < n) n = v;
  }
  return n;
}

}  // namespace modalcur
