// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "parrep/chain.hpp"
#include "parrep/qsd.hpp"
#include "parrep/rng.hpp"

namespace parrep {

class WorkerPool;

/// Tunables of one ParRep run. Times are in chain steps.
struct ParRepConfig {
    std::int64_t n_replicas = 1;
    std::int64_t t_corr = 1;
    std::int64_t t_phase = 1;
    std::int64_t t_poll = 1;
    std::uint64_t seed = 0;
    std::int64_t horizon = 0;
    std::uint64_t restart_cap = 1'000'000;
    std::int64_t max_poll_cycles = 100'000'000;
    /// Optional per-state dephasing start; otherwise the reference chain's
    /// position at the end of decorrelation is used.
    std::map<StateLabel, ChainPoint> dephase_init;

    /// Throws ContractViolation unless every count is positive (horizon may
    /// be zero).
    void validate() const;
};

//---------------------------------------------------------------------------//
// Accelerated time arithmetic
//---------------------------------------------------------------------------//

/// T_acc = (N - 1)(m - 1) t_poll + (k - 1) t_poll + tau_k, with k 1-based.
std::int64_t accelerated_time(std::int64_t n_replicas, std::int64_t t_poll,
                              std::int64_t m, std::int64_t k,
                              std::int64_t tau_k);

struct TimeDecomposition {
    std::int64_t m;
    std::int64_t k;
    std::int64_t t;  ///< in 1..t_poll
};

/// Unique (m, k, t) with z = N (m - 1) t_poll + (k - 1) t_poll + t.
TimeDecomposition decompose_accelerated_time(std::int64_t z,
                                             std::int64_t n_replicas,
                                             std::int64_t t_poll);

/// Continuous-time rule N tau_k dt, kept for error studies only.
double accelerated_time_legacy(std::int64_t n_replicas, std::int64_t tau_k,
                               double dt);

//---------------------------------------------------------------------------//
// Trajectories
//---------------------------------------------------------------------------//

/// Label of simulation-clock steps spent outside every state.
inline constexpr StateLabel kTransient = -1;

enum class SegmentKind { exact, accelerated };

struct Segment {
    StateLabel label;  ///< kTransient outside all states
    std::int64_t start;
    std::int64_t length;
    SegmentKind kind;
    friend bool operator==(Segment const&, Segment const&) = default;
};

/// Run-length encoded coarse trajectory tiling [0, total_time()).
class CoarseTrajectory {
  public:
    /// Appends `length` steps with one label. Consecutive exact steps with
    /// the same label are merged; accelerated segments are never merged.
    void append(StateLabel label, std::int64_t length, SegmentKind kind);
    void append(CoarseTrajectory const& tail);

    std::span<Segment const> segments() const noexcept { return segments_; }
    std::int64_t total_time() const noexcept { return total_; }
    /// Label at simulation time n; throws if n is outside [0, total_time()).
    StateLabel label_at(std::int64_t n) const;

    friend bool operator==(CoarseTrajectory const&,
                           CoarseTrajectory const&) = default;

  private:
    std::vector<Segment> segments_;
    std::int64_t total_ = 0;
};

//---------------------------------------------------------------------------//
// Algorithm steps
//---------------------------------------------------------------------------//

struct DecorrelationResult {
    /// State the chain settled in, or nullopt if the clock hit the horizon.
    std::optional<StateLabel> state;
    ChainPoint x_end;
    std::int64_t elapsed = 0;
    /// Labels of the emitted steps (one per elapsed step, starting with the
    /// label of x0).
    CoarseTrajectory trace;
    /// Exits from a state before its counter reached t_corr.
    std::map<StateLabel, std::int64_t> early_exits;
};

/// Exact evolution of the reference chain until the last t_corr transitions
/// all stayed in one state (the step entering the state does not count), or
/// until `max_steps` steps have been taken.
DecorrelationResult decorrelate(ChainModel const& model,
                                StatePartition const& partition,
                                ChainPoint const& x0, std::int64_t t_corr,
                                RngStream& rng, std::int64_t max_steps);

struct ExitEvent {
    StateLabel state = 0;
    ChainPoint x_acc;
    std::int64_t t_acc = 0;
    std::int64_t k = 0;       ///< 1-based replica index
    std::int64_t m = 0;       ///< polling cycles
    std::int64_t tau_k = 0;   ///< exit step of replica k
    std::int64_t t_par = 0;   ///< m * t_poll
};

struct ParallelStepOptions {
    std::int64_t max_poll_cycles = 100'000'000;
    WorkerPool const* pool = nullptr;
};

/// Polled parallel step. Replica j (0-based in the span) advances rngs[j]
/// only. In each window every replica runs t_poll steps or stops at its
/// first exit; at the poll the smallest exiting index wins. The result is
/// identical with or without a pool.
ExitEvent parallel_step(ChainModel const& model, State const& state,
                        std::vector<ChainPoint> replicas, std::int64_t t_poll,
                        std::span<RngStream> rngs,
                        ParallelStepOptions const& options = {});

struct Diagnostics {
    std::map<StateLabel, std::int64_t> visits;
    std::map<StateLabel, std::int64_t> early_exits;
    std::uint64_t dephasing_restarts = 0;
    std::uint64_t dephasing_steps = 0;
    std::int64_t exact_steps = 0;
    std::int64_t accelerated_steps = 0;
    std::int64_t parallel_time = 0;  ///< sum of t_par
};

struct ParRepResult {
    CoarseTrajectory trajectory;
    std::vector<ExitEvent> events;
    Diagnostics diagnostics;
};

/// Full ParRep loop until the simulation clock reaches config.horizon. The
/// reference chain uses stream 0 and replica j uses stream j (1-based); all
/// streams are keyed by config.seed and `substream`.
ParRepResult run_parrep(ChainModel const& model,
                        StatePartition const& partition,
                        ParRepConfig const& config, ChainPoint const& x0,
                        WorkerPool const* pool = nullptr,
                        std::uint64_t substream = 0);

/// Direct simulation of `horizon` steps, labelled by the partition.
CoarseTrajectory run_serial(ChainModel const& model,
                            StatePartition const& partition,
                            ChainPoint const& x0, std::int64_t horizon,
                            RngStream& rng);

//---------------------------------------------------------------------------//
// First-exit sampling from a single state
//---------------------------------------------------------------------------//

struct SerialExit {
    std::int64_t tau = 0;  ///< 0 if max_steps was reached without exit
    ChainPoint x_exit;
};

/// Runs the chain from x0 until it leaves `state` (up to max_steps steps).
SerialExit sample_exit_serial(ChainModel const& model, State const& state,
                              ChainPoint const& x0, RngStream& rng,
                              std::int64_t max_steps);

/// First exit from one state computed with decorrelation, dephasing and the
/// parallel step. If the reference chain leaves during decorrelation the exit
/// is exact and `event` is empty.
struct ParRepExit {
    std::int64_t decorrelation_steps = 0;
    std::optional<ExitEvent> event;
    ChainPoint x_exit;
    std::uint64_t dephasing_restarts = 0;

    bool exited_in_decorrelation() const noexcept { return !event; }
    /// decorrelation_steps + T_acc, in steps.
    std::int64_t corrected_steps() const noexcept;
    /// decorrelation_steps * dt + N tau_K dt.
    double legacy_time(std::int64_t n_replicas, double dt) const noexcept;
};

ParRepExit sample_exit_parrep(ChainModel const& model, State const& state,
                              ChainPoint const& x0, ParRepConfig const& config,
                              std::uint64_t substream,
                              WorkerPool const* pool = nullptr);

}  // namespace parrep
