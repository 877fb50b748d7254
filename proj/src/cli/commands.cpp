// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/cli/commands.hpp"

#include <cstdio>
#include <exception>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "parrep/cli/experiments.hpp"
#include "parrep/cli/output.hpp"
#include "parrep/errors.hpp"
#include "parrep/worker_pool.hpp"

namespace parrep::cli {
namespace {

template <class Body>
Body const& body_for(ExperimentSpec const& spec, ExperimentKind expected) {
    if (spec.kind != expected) {
        throw ConfigError(fmt::format("spec kind '{}' does not match command '{}'",
                                      to_string(spec.kind), to_string(expected)));
    }
    return std::get<Body>(spec.body);
}

bool finish(ExperimentSpec const& spec, CommandOptions const& options,
            OutputSet files, Report const& report) {
    write_outputs(options.out, spec, std::move(files), report);
    for (auto const& c : report.checks) {
        fmt::print("{} {}\n", c.passed ? "PASS" : "FAIL", c.name);
    }
    return report.passed();
}

}  // namespace

bool cmd_randomwalk_exit(ExperimentSpec const& spec, CommandOptions const& options) {
    auto const& body =
        body_for<RandomWalkExitSpec>(spec, ExperimentKind::randomwalk_exit);
    WorkerPool pool(options.threads);
    auto const result = run_randomwalk_exit(body, spec.seed, pool);
    return finish(spec, options, render(result), result.report);
}

bool cmd_diffusion_exit(ExperimentSpec const& spec, CommandOptions const& options) {
    auto const& body = body_for<DiffusionExitSpec>(spec, ExperimentKind::diffusion_exit);
    WorkerPool pool(options.threads);
    auto const result = run_diffusion_exit(body, pool);
    return finish(spec, options, render(result), result.report);
}

bool cmd_lemma1_verify(ExperimentSpec const& spec, CommandOptions const& options) {
    auto const& body = body_for<Lemma1Spec>(spec, ExperimentKind::lemma1_verify);
    auto const result = run_lemma1_verify(body);
    return finish(spec, options, render(result), result.report);
}

bool cmd_error_study(ExperimentSpec const& spec, CommandOptions const& options) {
    auto const& body = body_for<ErrorStudySpec>(spec, ExperimentKind::error_study);
    auto const result = run_error_study(body);
    return finish(spec, options, render(result), result.report);
}

bool cmd_parrep_run(ExperimentSpec const& spec, CommandOptions const& options) {
    auto const& body = body_for<ParRepRunSpec>(spec, ExperimentKind::parrep_run);
    WorkerPool pool(options.threads);
    auto const result = run_parrep_run(body, pool);
    return finish(spec, options, render(result), result.report);
}

bool run_command(CommandOptions const& options) {
    auto const kind = parse_kind(options.command);
    auto const spec = load_spec(options.spec, options.seed);
    switch (kind) {
        case ExperimentKind::randomwalk_exit:
            return cmd_randomwalk_exit(spec, options);
        case ExperimentKind::diffusion_exit:
            return cmd_diffusion_exit(spec, options);
        case ExperimentKind::lemma1_verify:
            return cmd_lemma1_verify(spec, options);
        case ExperimentKind::error_study:
            return cmd_error_study(spec, options);
        case ExperimentKind::parrep_run:
            return cmd_parrep_run(spec, options);
    }
    return false;
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Parallel replica dynamics for metastable Markov chains"};
    app.require_subcommand(1);
    CommandOptions options;
    std::uint64_t seed = 0;

    for (auto name : {"randomwalk-exit", "diffusion-exit", "lemma1-verify",
                      "error-study", "parrep-run"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--spec", options.spec, "experiment spec file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", options.out, "output directory")->required();
        sub->add_option("--seed", seed, "override the spec's seed");
        sub->add_option("--threads", options.threads,
                        "worker threads (0 = hardware concurrency)");
        sub->callback([&options, sub, &seed] {
            options.command = sub->get_name();
            if (sub->count("--seed") > 0) options.seed = seed;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        auto const code = app.exit(e);
        return code == 0 ? kSuccess : kUsageError;
    }

    try {
        return run_command(options) ? kSuccess : kChecksFailed;
    } catch (ConfigError const& e) {
        fmt::print(stderr, "parrep: configuration error: {}\n", e.what());
        return kUsageError;
    } catch (std::exception const& e) {
        fmt::print(stderr, "parrep: {}\n", e.what());
        return kRuntimeError;
    }
}

}  // namespace parrep::cli
