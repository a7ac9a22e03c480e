#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "catoni/harness.hpp"

namespace catoni {

// %.17g rendering used for every real written to disk (round-trips exactly).
std::string format_double(double value);

struct CsvReadResult {
  std::vector<std::string> header;  // empty when has_header was false
  Eigen::MatrixXd values;
  std::size_t dropped_rows = 0;  // rows discarded for non-numeric cells
};

// Comma-separated numeric table. Rows with the wrong field count raise a
// format error (std::runtime_error); rows with unparseable cells are dropped
// and counted. Lines starting with '#' are skipped.
CsvReadResult read_csv(const std::string& path, bool has_header);

// Report writers. Layout: '#key=value' metadata lines (sorted by key), then
// the fixed header, then the rows; LF line endings, reals as %.17g.
void write_report(const QuantileReport& report, const std::string& path);
void write_report(const SweepReport& report, const std::string& path);

// method,mae,medae,trimmed_mae
void write_metrics(
    const std::vector<std::pair<std::string, MetricsBundle>>& rows,
    const std::map<std::string, std::string>& metadata,
    const std::string& path);

// Generic key/value output used by the estimate subcommands.
void write_named_values(
    const std::vector<std::pair<std::string, double>>& rows,
    const std::map<std::string, std::string>& metadata,
    const std::string& path);

}  // namespace catoni
