#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hiersim::cli {

enum ExitCode {
  kOk = 0,
  kRuntimeError = 1,  // I/O failure or an internal error
  kUsage = 2,         // bad flags or malformed input files
  kInfeasible = 3,    // no staging plan / segmentation exists
  kVerifyFailed = 4,
  kBudget = 5,
};

struct RunConfig {
  std::string input;  // OpenQASM file
  std::string gen;    // family:n
  std::optional<int> local, regional, global;
  double comm_factor = 3.0;
  int max_stages = 16;
  int prune_T = 500;  // 0: no pruning ("inf")
  std::string cost_model;
  std::string out = ".";
  bool verify = false;
  unsigned long long seed = 1;
  long long budget_nodes = 10'000'000;
  bool greedy_staging = false;
  std::string kernelizer = "dp";
  std::string plan;     // staging plan JSON
  std::string kernels;  // kernel plans JSON
  std::string state;    // input state file
  bool random_state = false;
  // bench
  std::vector<std::string> families{"ghz", "qft", "graphstate_ring"};
  std::vector<int> sizes{6, 8, 10, 12, 14};
  std::vector<int> drops{0, 2, 4};

  // Throws hiersim::Error(InvalidArgument) on the first bad field.
  void validate(const std::string &command) const;
};

// Parses "500", "inf" or "0" into a prune width (0 = no pruning).
int parse_prune(const std::string &text);

// args excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace hiersim::cli
