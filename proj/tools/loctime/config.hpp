#pragma once

// Experiment configuration: JSON document form, validation, and the test
// function family syntax accepted by --f.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "loctime/test_function.hpp"

namespace loctime::cli {

inline const std::vector<std::string> kKinds{"ops", "stransform", "kernels", "mc", "convergence", "selftest"};

struct ExperimentConfig {
  std::string kind = "stransform";
  double H = 0.5;
  int d = 1;
  int N = 0;
  double eps = 0.0;
  /// Regularization widths for the convergence experiment.
  std::vector<double> eps_schedule{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  /// Test function family, see parse_test_function.
  std::string f = "zero";
  double tol = 1e-9;
  /// Highest chaos order for the kernels experiment.
  int max_order = 4;
  int m = 64;
  std::int64_t paths = 10000;
  std::uint64_t seed = 1;
  std::string generator = "whitenoise";
  std::string out = "loctime_out";

  bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Missing fields keep their defaults; unknown fields are rejected.
ExperimentConfig from_json(const nlohmann::json& j);

std::string emit(const ExperimentConfig& c);
ExperimentConfig parse(const std::string& text);

/// Throws ValidationError naming the first violated range.
void validate(const ExperimentConfig& c);

/// "zero", "gaussian:amp=A,center=C,width=W" or
/// "hermite:n=K,amp=A,center=C,scale=S". Components for d > 1 are separated
/// by ';'; a single component is repeated across all d.
VectorTestFunction parse_test_function(const std::string& spec, int d);

}  // namespace loctime::cli
