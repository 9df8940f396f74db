// Command-line front end for the luq shared library. Talks to the core
// exclusively through the C API in luq.h.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "luq.h"

namespace {

// Exit-code contract: 0 success, 2 config error, 3 IO error, 4 verification
// failure; 1 for anything else.
int status_to_exit(luq_status status) {
  switch (status) {
    case LUQ_OK:
      return 0;
    case LUQ_ERROR_CONFIG:
    case LUQ_ERROR_INVALID_ARGUMENT:
      return 2;
    case LUQ_ERROR_IO:
      return 3;
    case LUQ_ERROR_VERIFY_FAILED:
      return 4;
    default:
      return 1;
  }
}

int fail_with(luq_status status) {
  std::cerr << "error: " << luq_error_message() << "\n";
  return status_to_exit(status);
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int threads = 1;
  bool quiet = false;
};

luq_run_options to_options(const CommonArgs& args) {
  luq_run_options opts{};
  opts.output_path = args.out_path.empty() ? nullptr : args.out_path.c_str();
  opts.seed = args.seed;
  opts.has_seed = args.has_seed ? 1 : 0;
  opts.n_threads = args.threads;
  opts.quiet = args.quiet ? 1 : 0;
  return opts;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
  auto* config = cmd->add_option("--config", args.config_path, "experiment config (JSON)");
  if (needs_config) config->required();
  cmd->add_option("--out", args.out_path, "output path override");
  cmd->add_option("--seed", args.seed, "master seed override")
      ->each([&args](const std::string&) { args.has_seed = true; });
  cmd->add_option("--threads", args.threads, "parallel client workers per round")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"luq: local-update optimization methods on quadratic objectives"};
  app.require_subcommand(1);

  CommonArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "execute one configured experiment");
  add_common(run_cmd, run_args, true);

  CommonArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "run the config's parameter grid");
  add_common(sweep_cmd, sweep_args, true);

  CommonArgs verify_args;
  std::string suite = "all";
  auto* verify_cmd = app.add_subcommand("verify", "run invariant verification suites");
  verify_cmd->add_option("suite", suite, "suite name or 'all'");
  verify_cmd->add_flag("--list", "list suite names and exit");
  add_common(verify_cmd, verify_args, false);

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed() || sweep_cmd->parsed()) {
    const CommonArgs& args = run_cmd->parsed() ? run_args : sweep_args;
    std::string config_text;
    if (!read_file(args.config_path, config_text)) {
      std::cerr << "error: cannot read config file: " << args.config_path << "\n";
      return 3;
    }
    const luq_run_options opts = to_options(args);
    const luq_status status = run_cmd->parsed() ? luq_run_json(config_text.c_str(), &opts)
                                                : luq_sweep_json(config_text.c_str(), &opts);
    if (status != LUQ_OK) return fail_with(status);
    return 0;
  }

  // verify
  if (verify_cmd->count("--list") > 0) {
    char* names = nullptr;
    const luq_status status = luq_verify_suites(&names);
    if (status != LUQ_OK) return fail_with(status);
    std::cout << names;
    luq_string_free(names);
    return 0;
  }
  char* report = nullptr;
  const std::uint64_t seed = verify_args.has_seed ? verify_args.seed : 20240817ull;
  const luq_status status = luq_verify(suite.c_str(), seed, verify_args.threads, &report);
  if (report) {
    if (!verify_args.quiet) std::cout << report;
    luq_string_free(report);
  }
  if (status == LUQ_ERROR_VERIFY_FAILED) {
    std::cerr << "verification failed\n";
    return 4;
  }
  if (status != LUQ_OK) return fail_with(status);
  return 0;
}
