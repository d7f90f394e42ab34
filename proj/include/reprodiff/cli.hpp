#pragma once
#include <string>
#include <vector>

namespace reprodiff {

// One resolved command-line invocation.
struct RunRequest {
  std::string subcommand;              // validate | eig | r0 | sweep | periodic | zika
  std::string config_path;
  std::string output_dir = ".";
  std::vector<std::string> overrides;  // dotted.key=value, applied in order
  std::string sweep_what;              // sweep only: r0 | eigenvalue (default r0)
  int jobs = 1;
  long seed = 0;
};

// Execute a request: reads the JSON config, applies overrides, runs the task,
// and writes summary.txt plus per-task CSV files into output_dir. File names
// embed a config content hash and the grid resolution, and repeated runs with
// identical inputs produce byte-identical CSVs except for wall-clock columns.
// Returns the process exit code: 0 success, 1 computation failure (including
// validation findings), 2 malformed input.
int run_request(const RunRequest& req);

// argv parsing + run_request + exception-to-exit-code mapping.
int cli_main(int argc, const char* const* argv);

}  // namespace reprodiff
