#pragma once

#include <string>

#include "loctime/fractional_ops.hpp"

namespace loctime {

/// Integrability gate for the truncated local time: 2N(1-H) - dH > -1.
struct Admissibility {
  bool admissible;
  int minimal_n;
};

Admissibility admissibility(Hurst H, int d, int N);

/// Message naming the violated condition and the smallest valid N.
std::string admissibility_message(Hurst H, int d, int N);

}  // namespace loctime
