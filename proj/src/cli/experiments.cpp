// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/cli/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "parrep/errors.hpp"
#include "parrep/worker_pool.hpp"

namespace parrep::cli {

bool Report::passed() const noexcept {
    return std::all_of(checks.begin(), checks.end(),
                       [](Check const& c) { return c.passed; });
}

namespace {

NamedValues test_values(TestReport const& t) {
    return {{"statistic", t.statistic},
            {"threshold", t.threshold},
            {"p_value", t.p_value},
            {"dof", double(t.dof)},
            {"samples", double(t.samples)}};
}

template <class T>
double mean_of(std::vector<T> const& v) {
    if (v.empty()) return 0.0;
    long double sum = 0.0L;
    for (auto x : v) sum += static_cast<long double>(x);
    return static_cast<double>(sum / static_cast<long double>(v.size()));
}

std::vector<RngStream> replica_streams(std::uint64_t seed, std::int64_t n,
                                       std::uint64_t substream) {
    std::vector<RngStream> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t j = 1; j <= n; ++j) {
        out.emplace_back(seed, static_cast<std::uint64_t>(j), substream);
    }
    return out;
}

/// Inverse-CDF draw of a lattice site from nu with one uniform.
std::int64_t draw_site(std::vector<double> const& cumulative,
                       std::vector<std::int64_t> const& sites, RngStream& rng) {
    double const u = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto const idx = std::min<std::size_t>(
        static_cast<std::size_t>(it - cumulative.begin()), sites.size() - 1);
    return sites[idx];
}

}  // namespace

//---------------------------------------------------------------------------//

RandomWalkExitResult run_randomwalk_exit(RandomWalkExitSpec const& spec,
                                         std::uint64_t seed,
                                         WorkerPool const& pool) {
    auto const& model = *spec.setup.model;
    auto const& state = spec.setup.exit_state();
    auto const q = substochastic_matrix(model, state);

    RandomWalkExitResult out;
    out.qsd = exact_qsd(q);
    out.qsd.support = state.points();
    out.exit_law = exit_law_from_qsd(q, exit_map(model, state), out.qsd.nu);

    std::vector<double> cumulative(out.qsd.support.size());
    std::partial_sum(out.qsd.nu.data(), out.qsd.nu.data() + out.qsd.nu.size(),
                     cumulative.begin());

    auto const reps = static_cast<std::size_t>(spec.replications);
    for (auto n : spec.n_replicas) {
        RandomWalkRun run;
        run.n_replicas = n;
        run.t_acc.resize(reps);
        run.t_par.resize(reps);
        run.x_exit.resize(reps);
        std::vector<std::uint64_t> restarts(reps, 0);
        pool.parallel_for(reps, [&](std::size_t r) {
            auto streams = replica_streams(seed, n, r);
            std::vector<ChainPoint> starts;
            if (spec.replica_start == ReplicaStart::exact_qsd) {
                starts.reserve(streams.size());
                for (auto& s : streams) {
                    starts.push_back(lattice_point(
                        draw_site(cumulative, out.qsd.support, s)));
                }
            } else {
                auto dephased = dephase_rejection(
                    model, state, spec.setup.x0, spec.t_phase, streams,
                    {.restart_cap = spec.restart_cap, .pool = nullptr});
                for (auto c : dephased.restarts) restarts[r] += c;
                starts = std::move(dephased.positions);
            }
            auto const ev = parallel_step(model, state, std::move(starts),
                                          spec.t_poll, streams,
                                          {.max_poll_cycles = spec.max_poll_cycles});
            run.t_acc[r] = ev.t_acc;
            run.t_par[r] = ev.t_par;
            run.x_exit[r] = std::get<LatticePoint>(ev.x_acc).site;
        });
        run.dephasing_restarts =
            std::accumulate(restarts.begin(), restarts.end(), std::uint64_t{0});
        out.runs.push_back(std::move(run));
    }

    std::int64_t n_max = 1;
    for (auto const& run : out.runs) {
        n_max = std::max(n_max, *std::max_element(run.t_acc.begin(), run.t_acc.end()));
    }
    auto const nu = out.qsd.nu;
    out.exact_tau = exit_time_pmf_exact(q, nu, n_max);

    // P(tau < t) for bucketing T_acc into deciles of the reference law.
    std::vector<double> below(static_cast<std::size_t>(n_max) + 2, 0.0);
    for (std::int64_t t = 1; t <= n_max; ++t) {
        below[static_cast<std::size_t>(t) + 1] =
            below[static_cast<std::size_t>(t)] +
            out.exact_tau.probs[static_cast<std::size_t>(t) - 1];
    }
    constexpr std::size_t kBuckets = 10;
    auto const& exterior = out.exit_law.exterior;

    for (auto& run : out.runs) {
        run.t_acc_test = compare_distributions(run.t_acc, out.exact_tau,
                                               GofMethod::chi_square, spec.level);

        std::vector<std::vector<std::int64_t>> table(
            kBuckets, std::vector<std::int64_t>(exterior.size(), 0));
        run.exit_counts.assign(exterior.size(), 0);
        bool exterior_ok = true;
        for (std::size_t r = 0; r < reps; ++r) {
            auto it = std::find(exterior.begin(), exterior.end(), run.x_exit[r]);
            if (it == exterior.end()) {
                exterior_ok = false;
                continue;
            }
            auto const col = static_cast<std::size_t>(it - exterior.begin());
            auto const bucket = std::min<std::size_t>(
                kBuckets - 1, static_cast<std::size_t>(
                                  10.0 * below[static_cast<std::size_t>(run.t_acc[r])]));
            ++table[bucket][col];
            ++run.exit_counts[col];
        }
        run.independence_test = chi_square_independence(table, spec.level);

        bool in_band = exterior_ok;
        NamedValues exit_values;
        for (std::size_t e = 0; e < exterior.size(); ++e) {
            auto const ci = clopper_pearson(run.exit_counts[e], spec.replications,
                                            spec.confidence);
            run.exit_bands.push_back(ci);
            double const expected = out.exit_law.probs[static_cast<Eigen::Index>(e)];
            in_band = in_band && ci.low <= expected && expected <= ci.high;
            auto const site = exterior[e];
            exit_values.emplace_back(fmt::format("frequency_at_{}", site),
                                     double(run.exit_counts[e]) / double(reps));
            exit_values.emplace_back(fmt::format("oracle_at_{}", site), expected);
            exit_values.emplace_back(fmt::format("band_low_at_{}", site), ci.low);
            exit_values.emplace_back(fmt::format("band_high_at_{}", site), ci.high);
        }

        out.report.checks.push_back(
            {fmt::format("t_acc_pmf_N{}", run.n_replicas), run.t_acc_test.passed,
             test_values(run.t_acc_test)});
        out.report.checks.push_back({fmt::format("exit_law_N{}", run.n_replicas),
                                     in_band, std::move(exit_values)});
        out.report.checks.push_back(
            {fmt::format("exit_independence_N{}", run.n_replicas),
             run.independence_test.passed, test_values(run.independence_test)});
        out.report.summary.emplace_back(fmt::format("mean_t_acc_N{}", run.n_replicas),
                                        mean_of(run.t_acc));
        out.report.summary.emplace_back(fmt::format("mean_t_par_N{}", run.n_replicas),
                                        mean_of(run.t_par));
        out.report.summary.emplace_back(
            fmt::format("dephasing_restarts_N{}", run.n_replicas),
            double(run.dephasing_restarts));
    }
    out.report.summary.emplace_back("p", out.qsd.p);
    out.report.summary.emplace_back("mean_tau", 1.0 / out.qsd.p);

    if (out.runs.size() > 1) {
        std::vector<RandomWalkRun const*> by_n;
        for (auto const& run : out.runs) by_n.push_back(&run);
        std::sort(by_n.begin(), by_n.end(), [](auto a, auto b) {
            return a->n_replicas < b->n_replicas;
        });
        bool decreasing = true;
        NamedValues values;
        for (std::size_t i = 0; i < by_n.size(); ++i) {
            double const m = mean_of(by_n[i]->t_par);
            values.emplace_back(fmt::format("mean_t_par_N{}", by_n[i]->n_replicas), m);
            if (i > 0) decreasing = decreasing && m < mean_of(by_n[i - 1]->t_par);
        }
        values.emplace_back("ratio_largest_to_smallest_N",
                            mean_of(by_n.back()->t_par) / mean_of(by_n.front()->t_par));
        out.report.checks.push_back({"t_par_mean_decreasing", decreasing,
                                     std::move(values)});
    }
    return out;
}

//---------------------------------------------------------------------------//

DiffusionExitResult run_diffusion_exit(DiffusionExitSpec const& spec,
                                       WorkerPool const& pool) {
    auto const& model = *spec.setup.model;
    auto const& state = spec.setup.exit_state();
    auto const& em = dynamic_cast<EulerMaruyamaModel const&>(model);
    auto const n = spec.parrep.n_replicas;
    auto const reps = static_cast<std::size_t>(spec.replications);

    DiffusionExitResult out;
    out.dt = em.dt();
    out.samples.resize(reps);
    pool.parallel_for(reps, [&](std::size_t r) {
        auto& s = out.samples[r];
        RngStream reference(spec.parrep.seed, kReferenceStream, r);
        auto const serial = sample_exit_serial(model, state, spec.setup.x0,
                                               reference, spec.serial_max_steps);
        if (serial.tau == 0) {
            throw Error(fmt::format("serial chain of replication {} did not exit "
                                    "within {} steps",
                                    r, spec.serial_max_steps));
        }
        auto const par = sample_exit_parrep(model, state, spec.setup.x0,
                                            spec.parrep, r, nullptr);
        s.serial_steps = serial.tau;
        s.corrected_steps = par.corrected_steps();
        s.legacy_time = par.legacy_time(n, out.dt);
        s.decorrelation_steps = par.decorrelation_steps;
        s.decorrelation_exit = par.exited_in_decorrelation();
    });

    std::vector<double> serial(reps), corrected(reps), legacy(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        serial[r] = double(out.samples[r].serial_steps) * out.dt;
        corrected[r] = double(out.samples[r].corrected_steps) * out.dt;
        legacy[r] = out.samples[r].legacy_time;
    }

    double const t99 = empirical_quantile(serial, 0.99);
    auto const points = static_cast<std::size_t>(std::max<std::int64_t>(spec.cdf_points, 2));
    for (std::size_t i = 0; i < points; ++i) {
        out.grid.push_back(t99 * double(i) / double(points - 1));
    }
    out.serial = empirical_cdf_bands(serial, out.grid, spec.confidence);
    out.corrected = empirical_cdf_bands(corrected, out.grid, spec.confidence);
    out.legacy = empirical_cdf_bands(legacy, out.grid, spec.confidence);
    out.overlap_corrected = cdf_band_overlap(corrected, serial, out.grid, spec.confidence);
    out.overlap_legacy = cdf_band_overlap(legacy, serial, out.grid, spec.confidence);

    std::int64_t parallel_exits = 0, on_lattice = 0, corrected_lattice = 0;
    long double gap = 0.0L;
    double const block = double(n) * out.dt;
    for (auto const& s : out.samples) {
        if (s.decorrelation_exit) {
            ++out.decorrelation_exits;
            if (s.serial_steps != s.corrected_steps ||
                s.legacy_time != double(s.corrected_steps) * out.dt) {
                ++out.decorrelation_mismatches;
            }
            continue;
        }
        ++parallel_exits;
        double const ratio =
            (s.legacy_time - double(s.decorrelation_steps) * out.dt) / block;
        on_lattice += std::abs(ratio - std::round(ratio)) <= 1e-6;
        corrected_lattice += (s.corrected_steps - s.decorrelation_steps) % n == 0;
        gap += std::abs(double(s.corrected_steps) * out.dt - s.legacy_time);
    }
    if (parallel_exits > 0) {
        out.staircase_fraction = double(on_lattice) / double(parallel_exits);
        out.corrected_on_lattice = double(corrected_lattice) / double(parallel_exits);
        out.mean_abs_gap = static_cast<double>(gap / parallel_exits);
    } else {
        out.staircase_fraction = 1.0;
    }

    auto& rep = out.report;
    rep.checks.push_back({"cdf_overlap_corrected_vs_serial",
                          out.overlap_corrected >= spec.min_overlap,
                          {{"overlap", out.overlap_corrected},
                           {"threshold", spec.min_overlap}}});
    rep.checks.push_back({"legacy_staircase",
                          out.staircase_fraction >= spec.min_staircase,
                          {{"fraction", out.staircase_fraction},
                           {"threshold", spec.min_staircase},
                           {"parallel_exits", double(parallel_exits)}}});
    rep.checks.push_back({"decorrelation_exits_identical",
                          out.decorrelation_mismatches == 0,
                          {{"decorrelation_exits", double(out.decorrelation_exits)},
                           {"mismatches", double(out.decorrelation_mismatches)}}});
    rep.checks.push_back({"legacy_gap_within_n_dt", out.mean_abs_gap <= block,
                          {{"mean_abs_gap", out.mean_abs_gap}, {"n_dt", block}}});
    rep.summary = {{"t99_serial", t99},
                   {"mean_serial", mean_of(serial)},
                   {"mean_corrected", mean_of(corrected)},
                   {"mean_legacy", mean_of(legacy)},
                   {"overlap_legacy_vs_serial", out.overlap_legacy},
                   {"corrected_on_n_dt_lattice", out.corrected_on_lattice},
                   {"estimated_p", out.dt / mean_of(corrected)}};
    return out;
}

//---------------------------------------------------------------------------//

Lemma1Result run_lemma1_verify(Lemma1Spec const& spec) {
    Lemma1Result out;
    double worst = 0.0;
    std::int64_t failed = 0;
    auto const rule = spec.corrupt ? AcceleratedTimeRule::legacy
                                   : AcceleratedTimeRule::corrected;
    for (auto n : spec.n_replicas) {
        for (auto t_poll : spec.t_poll) {
            for (auto p : spec.p) {
                Lemma1Cell cell{.n_replicas = n, .t_poll = t_poll, .p = p};
                cell.z_max = std::max<std::int64_t>(
                    1, static_cast<std::int64_t>(
                           std::ceil(std::log(spec.mass) / std::log1p(-p))));
                auto const pmf = lemma1_pmf(n, t_poll, p, cell.z_max, rule);
                auto const geo = geometric_pmf(p, cell.z_max);
                cell.covered_mass = pmf.mass();
                for (std::size_t i = 0; i < pmf.probs.size(); ++i) {
                    cell.max_deviation = std::max(
                        cell.max_deviation, std::abs(pmf.probs[i] - geo.probs[i]));
                }
                auto const k = lemma1_k_marginal(n, t_poll, p);
                auto const k_ref = k_distribution(
                    n, -std::expm1(double(t_poll) * std::log1p(-p)));
                for (std::size_t i = 0; i < k.probs.size(); ++i) {
                    cell.k_max_deviation = std::max(
                        cell.k_max_deviation, std::abs(k.probs[i] - k_ref.probs[i]));
                }
                cell.passed = cell.max_deviation <= spec.tolerance &&
                              cell.k_max_deviation <= spec.tolerance &&
                              cell.covered_mass >= 1.0 - spec.mass - spec.tolerance;
                worst = std::max(worst, cell.max_deviation);
                failed += !cell.passed;
                out.cells.push_back(cell);
            }
        }
    }
    out.report.checks.push_back({"accelerated_time_identity", failed == 0,
                                 {{"cells", double(out.cells.size())},
                                  {"failed_cells", double(failed)},
                                  {"max_deviation", worst},
                                  {"tolerance", spec.tolerance}}});
    return out;
}

//---------------------------------------------------------------------------//

ErrorStudyResult run_error_study(ErrorStudySpec const& spec) {
    ErrorStudyResult out;
    std::int64_t violations = 0;
    bool single_exact = true;
    double worst_relative = 0.0;
    for (auto p : spec.p) {
        for (auto n : spec.n_replicas) {
            ErrorRow row{p, n, spec.dt, legacy_error(n, p, spec.dt)};
            violations += !row.error.within_bounds();
            if (n == 1) {
                single_exact = single_exact && row.error.absolute == 0.0 &&
                               row.error.relative == 0.0;
            }
            worst_relative =
                std::max(worst_relative, row.error.relative / row.error.bound_relative);
            out.rows.push_back(row);
        }
    }
    out.report.checks.push_back({"error_bounds", violations == 0,
                                 {{"rows", double(out.rows.size())},
                                  {"violations", double(violations)},
                                  {"max_relative_over_bound", worst_relative}}});
    out.report.checks.push_back({"single_replica_exact", single_exact, {}});
    return out;
}

//---------------------------------------------------------------------------//

ParRepRunResult run_parrep_run(ParRepRunSpec const& spec, WorkerPool const& pool) {
    ParRepRunResult out;
    out.run = run_parrep(*spec.model, *spec.partition, spec.parrep, spec.x0, &pool);

    auto const& traj = out.run.trajectory;
    std::int64_t tiled = 0;
    for (auto const& s : traj.segments()) tiled += s.length;
    bool const clock_ok = tiled == traj.total_time() &&
                          traj.total_time() ==
                              out.run.diagnostics.exact_steps +
                                  out.run.diagnostics.accelerated_steps;
    out.report.checks.push_back({"time_bookkeeping", clock_ok,
                                 {{"total_time", double(traj.total_time())},
                                  {"segment_sum", double(tiled)}}});

    if (spec.model->space() == SpaceKind::lattice) {
        for (auto const& state : spec.partition->states()) {
            std::vector<std::int64_t> t_acc;
            for (auto const& ev : out.run.events) {
                if (ev.state == state.label()) t_acc.push_back(ev.t_acc);
            }
            if (t_acc.empty()) continue;
            auto const q = substochastic_matrix(*spec.model, state);
            auto const qsd = exact_qsd(q);
            StateOracle o;
            o.label = state.label();
            o.p = qsd.p;
            o.visits = static_cast<std::int64_t>(t_acc.size());
            o.mean_t_acc = mean_of(t_acc);
            auto const top = *std::max_element(t_acc.begin(), t_acc.end());
            o.test = compare_distributions(t_acc, geometric_pmf(qsd.p, top),
                                           GofMethod::chi_square, spec.level);
            auto values = test_values(o.test);
            values.emplace_back("mean_t_acc", o.mean_t_acc);
            values.emplace_back("mean_tau", 1.0 / o.p);
            out.report.checks.push_back(
                {fmt::format("t_acc_geometric_state{}", o.label), o.test.passed,
                 std::move(values)});
            out.oracles.push_back(std::move(o));
        }
    }

    auto const& d = out.run.diagnostics;
    out.report.summary = {{"total_time", double(traj.total_time())},
                          {"events", double(out.run.events.size())},
                          {"exact_steps", double(d.exact_steps)},
                          {"accelerated_steps", double(d.accelerated_steps)},
                          {"parallel_time", double(d.parallel_time)},
                          {"dephasing_restarts", double(d.dephasing_restarts)},
                          {"dephasing_steps", double(d.dephasing_steps)}};
    return out;
}

}  // namespace parrep::cli
