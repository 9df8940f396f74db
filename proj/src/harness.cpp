#include "luq/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace luq {

namespace {

constexpr const char* kBaseHeader =
    "round,gamma,eta,true_loss,surrogate_loss,dist_true_min,dist_surrogate_min,"
    "update_norm,mean_client_loss,decayed";
constexpr const char* kDecayHeader =
    ",window_avg_loss,best_window_avg,stall_count,cooldown_remaining,n_decays";

void append_row(std::ostringstream& os, const RoundMetrics& r, bool decay_columns) {
  os << r.round << ',' << format_double(r.gamma) << ',' << format_double(r.eta) << ','
     << format_double(r.true_loss) << ',' << format_double(r.surrogate_loss) << ','
     << format_double(r.dist_true_min) << ',' << format_double(r.dist_surrogate_min) << ','
     << format_double(r.update_norm) << ',' << format_double(r.mean_client_loss) << ','
     << (r.decayed ? 1 : 0);
  if (decay_columns) {
    os << ',' << format_double(r.window_avg_loss) << ',' << format_double(r.best_window_avg)
       << ',' << r.stall_count << ',' << r.cooldown_remaining << ',' << r.n_decays;
  }
  os << '\n';
}

void write_file(const std::string& path, const std::string& content) {
  // Write to a sibling temp file and rename, so partially written outputs
  // never appear under the final name.
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot open output file: " + tmp.string());
    out << content;
    if (!out) fail(ErrorCode::io, "failed writing output file: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) fail(ErrorCode::io, "cannot move output into place: " + path + ": " + ec.message());
}

RunResult run_one(const Population& pop, const RunConfig& cfg, const RunOptions& opts) {
  RunSpec spec = build_run_spec(cfg, pop, opts.n_threads, opts.seed_override, opts.quiet);
  if (cfg.decay) return run_decay(pop, spec, *cfg.decay);
  return run(pop, spec);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string metrics_to_csv(const RunResult& result, bool decay_columns) {
  std::ostringstream os;
  os << kBaseHeader;
  if (decay_columns) os << kDecayHeader;
  os << '\n';
  for (const auto& row : result.rounds) append_row(os, row, decay_columns);
  if (result.diverged) os << "# diverged at round " << result.diverged_round << '\n';
  return os.str();
}

RunResult execute_run(const RunConfig& cfg, const RunOptions& opts) {
  const Population pop = build_population(cfg.problem);
  RunResult result = run_one(pop, cfg, opts);
  const std::string path = opts.output_override.empty() ? cfg.output : opts.output_override;
  write_file(path, metrics_to_csv(result, cfg.decay.has_value()));
  if (!opts.quiet) {
    std::cout << "wrote " << result.rounds.size() << " rounds to " << path;
    if (result.diverged) std::cout << " (diverged at round " << result.diverged_round << ")";
    std::cout << "\n";
  }
  return result;
}

std::string sweep_summary_path(const std::string& output) {
  const std::filesystem::path p(output);
  std::filesystem::path s = p;
  s.replace_extension();
  return s.string() + ".summary" + (p.has_extension() ? p.extension().string() : ".csv");
}

SweepResult execute_sweep(const RunConfig& cfg, const RunOptions& opts) {
  require(cfg.sweep.has_value(), ErrorCode::config,
          "config: sweep command needs a 'sweep' block (axis + values)");
  const SweepConfig& sweep = *cfg.sweep;
  if (sweep.axis == SweepConfig::Axis::k &&
      cfg.theta.kind == ThetaConfig::Kind::custom) {
    fail(ErrorCode::config, "config: a k-axis sweep needs a parameterized theta kind");
  }

  SweepResult out;
  const std::size_t n_points = sweep.axis == SweepConfig::Axis::gamma
                                   ? sweep.gamma_values.size()
                                   : sweep.k_values.size();
  for (std::size_t i = 0; i < n_points; ++i) {
    RunConfig point = cfg;
    std::string setting;
    if (sweep.axis == SweepConfig::Axis::gamma) {
      point.gamma = sweep.gamma_values[i];
      setting = format_double(point.gamma);
    } else {
      point.theta.k = sweep.k_values[i];
      setting = std::to_string(point.theta.k);
    }
    const Population pop = build_population(point.problem);
    if (out.dim == 0) out.dim = pop.dim();
    out.points.push_back({setting, run_one(pop, point, opts)});
  }

  // Combined long-format CSV keyed by (setting, round).
  std::ostringstream combined;
  combined << "setting," << kBaseHeader;
  if (cfg.decay) combined << kDecayHeader;
  combined << '\n';
  for (const auto& point : out.points) {
    std::ostringstream rows;
    for (const auto& row : point.result.rounds) append_row(rows, row, cfg.decay.has_value());
    std::istringstream lines(rows.str());
    std::string line;
    while (std::getline(lines, line)) combined << point.setting << ',' << line << '\n';
    if (point.result.diverged)
      combined << "# setting " << point.setting << " diverged at round "
               << point.result.diverged_round << '\n';
  }

  std::ostringstream summary;
  summary << "setting,rounds,diverged,final_dist_true_min,final_dist_surrogate_min";
  for (std::size_t k = 0; k < out.dim; ++k) summary << ",x_" << k;
  summary << '\n';
  for (const auto& point : out.points) {
    const bool has_rows = !point.result.rounds.empty();
    summary << point.setting << ',' << point.result.rounds.size() << ','
            << (point.result.diverged ? 1 : 0) << ','
            << format_double(has_rows ? point.result.rounds.back().dist_true_min : 0.0) << ','
            << format_double(has_rows ? point.result.rounds.back().dist_surrogate_min : 0.0);
    for (std::size_t k = 0; k < out.dim; ++k)
      summary << ',' << format_double(point.result.final_x[k]);
    summary << '\n';
  }

  const std::string path = opts.output_override.empty() ? cfg.output : opts.output_override;
  write_file(path, combined.str());
  write_file(sweep_summary_path(path), summary.str());
  if (!opts.quiet) {
    std::cout << "wrote " << out.points.size() << " sweep points to " << path
              << " (summary: " << sweep_summary_path(path) << ")\n";
  }
  return out;
}

}  // namespace luq
