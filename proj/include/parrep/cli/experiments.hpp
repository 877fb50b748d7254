// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "parrep/analysis.hpp"
#include "parrep/cli/spec_file.hpp"
#include "parrep/engine.hpp"
#include "parrep/qsd.hpp"

namespace parrep {
class WorkerPool;
}

namespace parrep::cli {

using NamedValues = std::vector<std::pair<std::string, double>>;

/// One pass/fail line of report.json.
struct Check {
    std::string name;
    bool passed = false;
    NamedValues values;
};

struct Report {
    std::vector<Check> checks;
    NamedValues summary;

    bool passed() const noexcept;
};

//---------------------------------------------------------------------------//

struct RandomWalkRun {
    std::int64_t n_replicas = 0;
    std::vector<std::int64_t> t_acc;
    std::vector<std::int64_t> t_par;
    std::vector<std::int64_t> x_exit;
    std::uint64_t dephasing_restarts = 0;
    TestReport t_acc_test;
    TestReport independence_test;
    /// Clopper-Pearson interval for the frequency of each exterior site.
    std::vector<ConfidenceInterval> exit_bands;
    std::vector<std::int64_t> exit_counts;
};

struct RandomWalkExitResult {
    QsdSolution qsd;
    ExitLaw exit_law;
    /// Law of tau from nu, truncated at the largest observed T_acc.
    Pmf exact_tau;
    std::vector<RandomWalkRun> runs;  ///< one per configured N, in order
    Report report;
};

/// Dephasing (or exact QSD sampling) followed by the parallel step, repeated
/// `replications` times for every N. Replication r uses substream r.
RandomWalkExitResult run_randomwalk_exit(RandomWalkExitSpec const& spec,
                                         std::uint64_t seed,
                                         WorkerPool const& pool);

//---------------------------------------------------------------------------//

struct DiffusionSample {
    std::int64_t serial_steps = 0;
    std::int64_t corrected_steps = 0;
    double legacy_time = 0.0;
    std::int64_t decorrelation_steps = 0;
    bool decorrelation_exit = false;
};

struct DiffusionExitResult {
    double dt = 0.0;
    std::vector<DiffusionSample> samples;
    std::vector<double> grid;  ///< physical time
    std::vector<CdfBandPoint> serial;
    std::vector<CdfBandPoint> corrected;
    std::vector<CdfBandPoint> legacy;
    double overlap_corrected = 0.0;
    double overlap_legacy = 0.0;
    /// Fraction of parallel-step exits whose legacy time past decorrelation
    /// is a multiple of N dt.
    double staircase_fraction = 0.0;
    /// Same fraction for the corrected times, for contrast.
    double corrected_on_lattice = 0.0;
    double mean_abs_gap = 0.0;  ///< mean |T_corrected dt - T_legacy|
    std::int64_t decorrelation_exits = 0;
    std::int64_t decorrelation_mismatches = 0;
    Report report;
};

/// Serial sampling, ParRep with the corrected rule and the legacy rule from
/// one set of runs. The serial chain of replication r shares the reference
/// stream (seed, 0, r) with ParRep, so both coincide until decorrelation ends.
DiffusionExitResult run_diffusion_exit(DiffusionExitSpec const& spec,
                                       WorkerPool const& pool);

//---------------------------------------------------------------------------//

struct Lemma1Cell {
    std::int64_t n_replicas = 0;
    std::int64_t t_poll = 0;
    double p = 0.0;
    std::int64_t z_max = 0;
    double covered_mass = 0.0;
    double max_deviation = 0.0;    ///< against Geometric(p)
    double k_max_deviation = 0.0;  ///< K marginal against its closed form
    bool passed = false;
};

struct Lemma1Result {
    std::vector<Lemma1Cell> cells;
    Report report;
};

Lemma1Result run_lemma1_verify(Lemma1Spec const& spec);

//---------------------------------------------------------------------------//

struct ErrorRow {
    double p = 0.0;
    std::int64_t n_replicas = 0;
    double dt = 0.0;
    ErrorReport error;
};

struct ErrorStudyResult {
    std::vector<ErrorRow> rows;
    Report report;
};

ErrorStudyResult run_error_study(ErrorStudySpec const& spec);

//---------------------------------------------------------------------------//

struct StateOracle {
    StateLabel label = 0;
    double p = 0.0;
    std::int64_t visits = 0;
    double mean_t_acc = 0.0;
    TestReport test;
};

struct ParRepRunResult {
    ParRepResult run;
    /// Geometric oracle per lattice state with at least one visit.
    std::vector<StateOracle> oracles;
    Report report;
};

ParRepRunResult run_parrep_run(ParRepRunSpec const& spec, WorkerPool const& pool);

}  // namespace parrep::cli
