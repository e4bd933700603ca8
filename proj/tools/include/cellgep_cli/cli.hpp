#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cellgep/evolution.hpp"

namespace cellgep::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kRuntime = 2,
    kProtocol = 3,
};

/// Entry point of the `cellgep` tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct EvaluatorChoice {
    std::string kind = "surrogate"; ///< surrogate | external
    std::string trainer_cmd;
    double trainer_timeout = 3600.0;
    std::string weight_dir = "weights";
};

/// Throws std::invalid_argument for an unknown kind or a missing trainer
/// command.
std::unique_ptr<Evaluator> make_evaluator(const EvaluatorChoice& choice, const SearchConfig& config);

/// Writes best/: genotype text files, the champion record and descriptors
/// at search and full width.
void write_best(const std::filesystem::path& out_dir, const Champion& champion, const SearchConfig& config);

/// Keeps the first `lines` lines of a file (used when resuming).
void truncate_lines(const std::filesystem::path& path, std::uint64_t lines);

std::vector<double> parse_number_list(const std::string& text);

} // namespace cellgep::cli
