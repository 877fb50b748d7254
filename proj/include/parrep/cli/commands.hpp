// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "parrep/cli/spec_file.hpp"

namespace parrep::cli {

struct CommandOptions {
    std::string command;
    std::filesystem::path spec;
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;  ///< 0 selects the hardware concurrency
};

/// Exit codes of the `parrep` executable.
enum ExitCode : int {
    kSuccess = 0,
    kRuntimeError = 1,
    kUsageError = 2,
    kChecksFailed = 3,
};

/// Each command checks that the spec's kind matches, runs the experiment and
/// writes its outputs. Returns true if every report check passed.
bool cmd_randomwalk_exit(ExperimentSpec const& spec, CommandOptions const& options);
bool cmd_diffusion_exit(ExperimentSpec const& spec, CommandOptions const& options);
bool cmd_lemma1_verify(ExperimentSpec const& spec, CommandOptions const& options);
bool cmd_error_study(ExperimentSpec const& spec, CommandOptions const& options);
bool cmd_parrep_run(ExperimentSpec const& spec, CommandOptions const& options);

/// Loads the spec and dispatches on options.command.
bool run_command(CommandOptions const& options);

/// Entry point of the executable; parses argv and maps errors to ExitCode.
int main_entry(int argc, char** argv);

}  // namespace parrep::cli
