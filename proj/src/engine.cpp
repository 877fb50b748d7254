// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/engine.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "parrep/errors.hpp"
#include "parrep/worker_pool.hpp"

namespace parrep {

void ParRepConfig::validate() const {
    auto positive = [](std::int64_t v, char const* name) {
        if (v < 1) {
            throw ContractViolation(fmt::format("{} must be >= 1, got {}", name, v));
        }
    };
    positive(n_replicas, "n_replicas");
    positive(t_corr, "t_corr");
    positive(t_phase, "t_phase");
    positive(t_poll, "t_poll");
    positive(max_poll_cycles, "max_poll_cycles");
    if (restart_cap < 1) throw ContractViolation("restart_cap must be >= 1");
    if (horizon < 0) throw ContractViolation("horizon must be >= 0");
}

//---------------------------------------------------------------------------//

std::int64_t accelerated_time(std::int64_t n_replicas, std::int64_t t_poll,
                              std::int64_t m, std::int64_t k,
                              std::int64_t tau_k) {
    if (n_replicas < 1 || t_poll < 1 || m < 1 || k < 1 || k > n_replicas) {
        throw ContractViolation("accelerated_time: arguments out of range");
    }
    if (tau_k <= (m - 1) * t_poll || tau_k > m * t_poll) {
        throw ContractViolation(fmt::format(
            "tau_k = {} is not in polling window {} of length {}", tau_k, m,
            t_poll));
    }
    return (n_replicas - 1) * (m - 1) * t_poll + (k - 1) * t_poll + tau_k;
}

TimeDecomposition decompose_accelerated_time(std::int64_t z,
                                             std::int64_t n_replicas,
                                             std::int64_t t_poll) {
    if (z < 1 || n_replicas < 1 || t_poll < 1) {
        throw ContractViolation("decompose_accelerated_time: arguments out of range");
    }
    auto const block = n_replicas * t_poll;
    auto const r = (z - 1) % block;
    return {(z - 1) / block + 1, r / t_poll + 1, r % t_poll + 1};
}

double accelerated_time_legacy(std::int64_t n_replicas, std::int64_t tau_k,
                               double dt) {
    if (tau_k < 1) throw ContractViolation("tau_k must be >= 1");
    return static_cast<double>(n_replicas) * static_cast<double>(tau_k) * dt;
}

//---------------------------------------------------------------------------//

void CoarseTrajectory::append(StateLabel label, std::int64_t length,
                              SegmentKind kind) {
    if (length <= 0) return;
    if (kind == SegmentKind::exact && !segments_.empty() &&
        segments_.back().kind == SegmentKind::exact &&
        segments_.back().label == label) {
        segments_.back().length += length;
    } else {
        segments_.push_back({label, total_, length, kind});
    }
    total_ += length;
}

void CoarseTrajectory::append(CoarseTrajectory const& tail) {
    for (auto const& s : tail.segments_) append(s.label, s.length, s.kind);
}

StateLabel CoarseTrajectory::label_at(std::int64_t n) const {
    if (n < 0 || n >= total_) {
        throw ContractViolation(fmt::format(
            "time {} outside trajectory of length {}", n, total_));
    }
    auto it = std::upper_bound(
        segments_.begin(), segments_.end(), n,
        [](std::int64_t t, Segment const& s) { return t < s.start; });
    return std::prev(it)->label;
}

//---------------------------------------------------------------------------//

DecorrelationResult decorrelate(ChainModel const& model,
                                StatePartition const& partition,
                                ChainPoint const& x0, std::int64_t t_corr,
                                RngStream& rng, std::int64_t max_steps) {
    model.check_point(x0);
    if (t_corr < 1) throw ContractViolation("t_corr must be >= 1");

    DecorrelationResult out;
    out.x_end = x0;
    auto& x = out.x_end;
    auto current = partition.state_of(x);
    std::int64_t counter = 0;
    while (true) {
        if (current && counter >= t_corr) {
            out.state = current;
            return out;
        }
        if (out.elapsed >= max_steps) return out;
        out.trace.append(current.value_or(kTransient), 1, SegmentKind::exact);
        model.advance(x, rng);
        ++out.elapsed;
        auto const next = partition.state_of(x);
        if (current && next == current) {
            ++counter;
        } else {
            if (current) ++out.early_exits[*current];
            current = next;
            counter = 0;
        }
    }
}

ExitEvent parallel_step(ChainModel const& model, State const& state,
                        std::vector<ChainPoint> replicas, std::int64_t t_poll,
                        std::span<RngStream> rngs,
                        ParallelStepOptions const& options) {
    auto const n = replicas.size();
    if (n == 0 || rngs.size() != n) {
        throw ContractViolation(fmt::format(
            "parallel_step needs one stream per replica ({} replicas, {} "
            "streams)",
            n, rngs.size()));
    }
    if (t_poll < 1) throw ContractViolation("t_poll must be >= 1");
    for (auto const& x : replicas) {
        model.check_point(x);
        if (!state.contains(x)) {
            throw ContractViolation(
                fmt::format("replica start {} is outside state {}",
                            to_string(x), state.label()));
        }
    }

    std::vector<std::int64_t> exit_step(n, 0);
    auto window = [&](std::size_t j) {
        auto& x = replicas[j];
        auto& rng = rngs[j];
        exit_step[j] = 0;
        for (std::int64_t s = 1; s <= t_poll; ++s) {
            model.advance(x, rng);
            if (!state.contains(x)) {
                exit_step[j] = s;
                return;
            }
        }
    };

    auto const replica_count = static_cast<std::int64_t>(n);
    for (std::int64_t m = 1; m <= options.max_poll_cycles; ++m) {
        if (options.pool) {
            options.pool->parallel_for(n, window);
        } else {
            for (std::size_t j = 0; j < n; ++j) window(j);
        }
        auto const hit = std::find_if(exit_step.begin(), exit_step.end(),
                                      [](std::int64_t s) { return s > 0; });
        if (hit == exit_step.end()) continue;

        auto const j = static_cast<std::size_t>(hit - exit_step.begin());
        ExitEvent ev;
        ev.state = state.label();
        ev.k = static_cast<std::int64_t>(j) + 1;
        ev.m = m;
        ev.tau_k = (m - 1) * t_poll + *hit;
        ev.t_acc = accelerated_time(replica_count, t_poll, m, ev.k, ev.tau_k);
        ev.t_par = m * t_poll;
        ev.x_acc = std::move(replicas[j]);
        return ev;
    }
    throw RunawayParallelStep(fmt::format(
        "no replica left state {} within {} polling cycles", state.label(),
        options.max_poll_cycles));
}

//---------------------------------------------------------------------------//

namespace {

std::vector<RngStream> make_streams(std::uint64_t seed, std::int64_t replicas,
                                    std::uint64_t substream) {
    std::vector<RngStream> streams;
    streams.reserve(static_cast<std::size_t>(replicas) + 1);
    for (std::int64_t j = 0; j <= replicas; ++j) {
        streams.emplace_back(seed, static_cast<std::uint64_t>(j), substream);
    }
    return streams;
}

ChainPoint dephasing_start(ParRepConfig const& config, State const& state,
                           ChainPoint const& reference) {
    auto it = config.dephase_init.find(state.label());
    if (it == config.dephase_init.end()) return reference;
    if (!state.contains(it->second)) {
        throw ContractViolation(
            fmt::format("configured dephasing start {} is outside state {}",
                        to_string(it->second), state.label()));
    }
    return it->second;
}

}  // namespace

ParRepResult run_parrep(ChainModel const& model,
                        StatePartition const& partition,
                        ParRepConfig const& config, ChainPoint const& x0,
                        WorkerPool const* pool, std::uint64_t substream) {
    config.validate();
    model.check_point(x0);
    auto streams = make_streams(config.seed, config.n_replicas, substream);
    auto& reference = streams[0];
    std::span<RngStream> replica_streams(streams.data() + 1,
                                         static_cast<std::size_t>(config.n_replicas));

    ParRepResult out;
    auto& diag = out.diagnostics;
    ChainPoint x = x0;
    std::int64_t clock = 0;
    while (clock < config.horizon) {
        auto dec = decorrelate(model, partition, x, config.t_corr, reference,
                               config.horizon - clock);
        out.trajectory.append(dec.trace);
        clock += dec.elapsed;
        diag.exact_steps += dec.elapsed;
        for (auto const& [label, count] : dec.early_exits) {
            diag.early_exits[label] += count;
        }
        if (!dec.state) break;

        auto const& state = partition.state(*dec.state);
        ++diag.visits[state.label()];
        auto const init = dephasing_start(config, state, dec.x_end);
        auto dephased = dephase_rejection(
            model, state, init, config.t_phase, replica_streams,
            {.restart_cap = config.restart_cap, .pool = pool});
        for (auto r : dephased.restarts) diag.dephasing_restarts += r;
        diag.dephasing_steps += dephased.steps;

        auto ev = parallel_step(model, state, std::move(dephased.positions),
                                config.t_poll, replica_streams,
                                {.max_poll_cycles = config.max_poll_cycles,
                                 .pool = pool});
        out.trajectory.append(state.label(), ev.t_acc, SegmentKind::accelerated);
        clock += ev.t_acc;
        diag.accelerated_steps += ev.t_acc;
        diag.parallel_time += ev.t_par;
        x = ev.x_acc;
        out.events.push_back(std::move(ev));
    }
    return out;
}

CoarseTrajectory run_serial(ChainModel const& model,
                            StatePartition const& partition,
                            ChainPoint const& x0, std::int64_t horizon,
                            RngStream& rng) {
    model.check_point(x0);
    CoarseTrajectory traj;
    ChainPoint x = x0;
    for (std::int64_t t = 0; t < horizon; ++t) {
        traj.append(partition.state_of(x).value_or(kTransient), 1,
                    SegmentKind::exact);
        model.advance(x, rng);
    }
    return traj;
}

//---------------------------------------------------------------------------//

SerialExit sample_exit_serial(ChainModel const& model, State const& state,
                              ChainPoint const& x0, RngStream& rng,
                              std::int64_t max_steps) {
    model.check_point(x0);
    if (!state.contains(x0)) {
        throw ContractViolation("sample_exit_serial: x0 is outside the state");
    }
    SerialExit out{0, x0};
    for (std::int64_t n = 1; n <= max_steps; ++n) {
        model.advance(out.x_exit, rng);
        if (!state.contains(out.x_exit)) {
            out.tau = n;
            return out;
        }
    }
    return out;
}

std::int64_t ParRepExit::corrected_steps() const noexcept {
    return decorrelation_steps + (event ? event->t_acc : 0);
}

double ParRepExit::legacy_time(std::int64_t n_replicas,
                               double dt) const noexcept {
    double t = static_cast<double>(decorrelation_steps) * dt;
    if (event) t += accelerated_time_legacy(n_replicas, event->tau_k, dt);
    return t;
}

ParRepExit sample_exit_parrep(ChainModel const& model, State const& state,
                              ChainPoint const& x0, ParRepConfig const& config,
                              std::uint64_t substream,
                              WorkerPool const* pool) {
    config.validate();
    model.check_point(x0);
    if (!state.contains(x0)) {
        throw ContractViolation("sample_exit_parrep: x0 is outside the state");
    }
    auto streams = make_streams(config.seed, config.n_replicas, substream);
    std::span<RngStream> replica_streams(streams.data() + 1,
                                         static_cast<std::size_t>(config.n_replicas));

    ParRepExit out;
    out.x_exit = x0;
    // Decorrelation restricted to one state: exact until t_corr steps inside.
    for (std::int64_t n = 1; n <= config.t_corr; ++n) {
        model.advance(out.x_exit, streams[0]);
        out.decorrelation_steps = n;
        if (!state.contains(out.x_exit)) return out;
    }

    auto const init = dephasing_start(config, state, out.x_exit);
    auto dephased = dephase_rejection(
        model, state, init, config.t_phase, replica_streams,
        {.restart_cap = config.restart_cap, .pool = pool});
    for (auto r : dephased.restarts) out.dephasing_restarts += r;
    out.event = parallel_step(model, state, std::move(dephased.positions),
                              config.t_poll, replica_streams,
                              {.max_poll_cycles = config.max_poll_cycles,
                               .pool = pool});
    out.x_exit = out.event->x_acc;
    return out;
}

}  // namespace parrep
