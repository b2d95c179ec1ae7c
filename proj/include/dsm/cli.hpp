#pragma once

#include <optional>
#include <string>

// Config ingestion and solver orchestration behind the `dsm` command line
// tool: solve / check / sweep over a JSON run configuration.

namespace dsm::cli {

struct GlobalOptions {
    std::optional<std::string> out_dir;  // overrides outputs.dir
    std::optional<unsigned> seed;        // overrides noise.seed and certificate.seed
};

// Exit codes: 0 certified run with zero bound violations, 1 hard error,
// 2 certificate failure (run still executed), 3 degenerate pass (check only).
int cmd_solve(const std::string& config_path, const GlobalOptions& opts);
int cmd_check(const std::string& config_path, const GlobalOptions& opts);
int cmd_sweep(const std::string& config_path, const GlobalOptions& opts);

}  // namespace dsm::cli
