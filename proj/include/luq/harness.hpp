#pragma once

#include <string>

#include "luq/config.hpp"

namespace luq {

struct RunOptions {
  std::string output_override;  // empty: keep config value
  std::optional<std::uint64_t> seed_override;
  int n_threads = 1;
  bool quiet = false;
};

/// Formats a double with 17 significant digits (CSV float contract).
std::string format_double(double v);

/// Metrics CSV, one row per round. Decay runs append the plateau columns.
std::string metrics_to_csv(const RunResult& result, bool decay_columns);

/// Executes the configured run (plain or plateau-decay) and writes the
/// metrics CSV. Divergence is data, not an error.
RunResult execute_run(const RunConfig& cfg, const RunOptions& opts);

struct SweepPoint {
  std::string setting;  // axis value as printed in the combined CSV
  RunResult result;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::size_t dim = 0;
};

/// One run per grid point, all sharing the master seed. Writes the combined
/// long-format CSV plus a converged-point summary next to it.
SweepResult execute_sweep(const RunConfig& cfg, const RunOptions& opts);

/// Summary path derived from the combined CSV path (.summary.csv suffix).
std::string sweep_summary_path(const std::string& output);

}  // namespace luq
