#pragma once

#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "svg.hpp"

namespace loctime::cli {

struct ResultRow {
  std::string id;
  /// Formatted values, one per parameter column of the experiment kind.
  std::vector<std::string> params;
  std::string quantity;
  double value = 0.0;
  double err = 0.0;
  std::string units = "1";
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::optional<PlotSpec> plot;
  /// Set when the experiment completed but a check or tolerance failed;
  /// the run then exits with the accuracy code.
  std::string failure;
};

/// Parameter columns of the CSV for one experiment kind.
const std::vector<std::string>& param_columns(const std::string& kind);
/// experiment,id,<params>,quantity,value,err,units
std::string csv_header(const std::string& kind);
std::string csv_line(const std::string& kind, const ResultRow& row);

/// Runs a validated configuration. Library errors propagate.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace loctime::cli
