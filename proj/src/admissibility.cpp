#include "loctime/admissibility.hpp"

#include <sstream>

#include "loctime/errors.hpp"

namespace loctime {
namespace {

bool condition(double h, int d, int N) { return 2.0 * N * (1.0 - h) - d * h > -1.0; }

}  // namespace

Admissibility admissibility(Hurst H, int d, int N) {
  if (d < 1) throw ValidationError("dimension d must be >= 1");
  if (N < 0) throw ValidationError("truncation level N must be >= 0");
  const double h = H.value();
  int n = 0;
  // 2n(1-H) grows without bound, so the search ends.
  while (!condition(h, d, n)) {
    ++n;
    if (n > 100000000) throw ValidationError("no admissible truncation level found");
  }
  return {condition(h, d, N), n};
}

std::string admissibility_message(Hurst H, int d, int N) {
  const Admissibility a = admissibility(H, d, N);
  std::ostringstream msg;
  msg << "2N(1-H)-dH must exceed -1 (H=" << H.value() << ", d=" << d << ", N=" << N
      << " gives " << 2.0 * N * (1.0 - H.value()) - d * H.value() << "); minimal N = " << a.minimal_n;
  return msg.str();
}

}  // namespace loctime
