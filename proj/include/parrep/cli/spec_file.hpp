// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "parrep/chain.hpp"
#include "parrep/config.hpp"
#include "parrep/engine.hpp"

namespace parrep::cli {

enum class ExperimentKind {
    randomwalk_exit,
    diffusion_exit,
    lemma1_verify,
    error_study,
    parrep_run,
};

std::string_view to_string(ExperimentKind kind) noexcept;
/// Throws ConfigError on an unknown name.
ExperimentKind parse_kind(std::string_view name);

/// Model, partition and the single state an exit experiment runs in.
struct ExitSetup {
    std::shared_ptr<ChainModel const> model;
    std::shared_ptr<StatePartition const> partition;
    StateLabel state = 0;
    ChainPoint x0;

    State const& exit_state() const { return partition->state(state); }
};

enum class ReplicaStart { dephase, exact_qsd };

struct RandomWalkExitSpec {
    ExitSetup setup;
    std::vector<std::int64_t> n_replicas;
    std::int64_t t_phase = 25;
    std::int64_t t_poll = 10;
    std::int64_t replications = 100'000;
    ReplicaStart replica_start = ReplicaStart::dephase;
    std::uint64_t restart_cap = 1'000'000;
    std::int64_t max_poll_cycles = 100'000'000;
    double level = 0.01;
    double confidence = 0.95;
};

struct DiffusionExitSpec {
    ExitSetup setup;
    ParRepConfig parrep;  ///< horizon unused
    std::int64_t replications = 100'000;
    std::int64_t serial_max_steps = 1'000'000'000;
    std::int64_t cdf_points = 200;
    double confidence = 0.95;
    double min_overlap = 0.99;
    double min_staircase = 0.99;
};

struct Lemma1Spec {
    std::vector<std::int64_t> n_replicas{1, 2, 3, 5};
    std::vector<std::int64_t> t_poll{1, 2, 3};
    std::vector<double> p{0.1, 0.3, 0.7};
    double tolerance = 1e-12;
    double mass = 1e-9;  ///< truncated tail allowed beyond the support
    /// Test hook: evaluate the legacy rule N tau_K instead, which must fail.
    bool corrupt = false;
};

struct ErrorStudySpec {
    std::vector<double> p;
    std::vector<std::int64_t> n_replicas;
    double dt = 0.01;
};

struct ParRepRunSpec {
    std::shared_ptr<ChainModel const> model;
    std::shared_ptr<StatePartition const> partition;
    ChainPoint x0;
    ParRepConfig parrep;
    double level = 0.01;
};

using SpecBody = std::variant<RandomWalkExitSpec, DiffusionExitSpec, Lemma1Spec,
                              ErrorStudySpec, ParRepRunSpec>;

struct ExperimentSpec {
    ExperimentKind kind;
    std::uint64_t seed = 0;
    /// Effective configuration after command-line overrides.
    KeyValueConfig config;
    /// Raw bytes of the spec file as read.
    std::string source_text;
    SpecBody body;
};

/// Parses and validates a spec. `seed_override` replaces the `seed` key.
/// Throws ConfigError on missing, malformed or unknown keys.
ExperimentSpec parse_spec(std::string_view text, std::string source,
                          std::optional<std::uint64_t> seed_override = {});
ExperimentSpec load_spec(std::filesystem::path const& path,
                         std::optional<std::uint64_t> seed_override = {});

}  // namespace parrep::cli
