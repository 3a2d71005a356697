#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace lwucb::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kPartialFailure = 2, kIo = 3 };

struct GlobalOptions {
    int jobs = 1;
    /// Replaces the experiment file's master seed.
    std::optional<std::uint64_t> seed;
    /// Replaces the experiment file's output directory.
    std::optional<std::filesystem::path> out;
};

/// One bundle per acquisition under <out>/<label>, then a median R_T table.
int cmd_run(const std::filesystem::path& spec_path, const GlobalOptions& opts, std::ostream& out,
            std::ostream& err);

/// Mean per-iteration seconds for every acquisition, written to <out>/runtime.csv.
int cmd_bench_runtime(const std::filesystem::path& spec_path, const GlobalOptions& opts,
                      std::ostream& out, std::ostream& err);

/// LW-UCB bundles under <out>/sweep_gmm/ngmm_<k>, one per value, sharing trial seeds.
int cmd_sweep_gmm(const std::filesystem::path& spec_path, const std::vector<int>& values,
                  const GlobalOptions& opts, std::ostream& out, std::ostream& err);

} // namespace lwucb::cli
