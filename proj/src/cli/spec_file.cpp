// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/cli/spec_file.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "parrep/errors.hpp"

namespace parrep::cli {
namespace {

struct KindName {
    ExperimentKind kind;
    std::string_view name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::randomwalk_exit, "randomwalk-exit"},
    {ExperimentKind::diffusion_exit, "diffusion-exit"},
    {ExperimentKind::lemma1_verify, "lemma1-verify"},
    {ExperimentKind::error_study, "error-study"},
    {ExperimentKind::parrep_run, "parrep-run"},
};

std::int64_t positive_int(KeyValueConfig const& cfg, std::string const& key,
                          std::int64_t fallback) {
    auto const v = cfg.get_int(key, fallback);
    if (v < 1) throw ConfigError(fmt::format("{} must be >= 1, got {}", key, v));
    return v;
}

double open_unit(KeyValueConfig const& cfg, std::string const& key,
                 double fallback) {
    auto const v = cfg.get_double(key, fallback);
    if (!(v > 0.0 && v < 1.0)) {
        throw ConfigError(fmt::format("{} must lie in (0, 1), got {}", key, v));
    }
    return v;
}

ExitSetup parse_exit_setup(KeyValueConfig const& cfg) {
    ExitSetup s;
    auto model = build_model(cfg);
    auto partition = std::make_shared<StatePartition const>(build_partition(cfg, *model));
    if (partition->states().empty()) {
        throw ConfigError("at least one state.<label> key is required");
    }
    if (cfg.has("exit_state")) {
        s.state = static_cast<StateLabel>(cfg.get_int("exit_state"));
        bool found = false;
        for (auto const& st : partition->states()) found |= st.label() == s.state;
        if (!found) {
            throw ConfigError(fmt::format("exit_state {} is not defined", s.state));
        }
    } else if (partition->states().size() == 1) {
        s.state = partition->states().front().label();
    } else {
        throw ConfigError("exit_state is required when several states are defined");
    }
    s.x0 = parse_point(cfg.get_string("x0"), *model);
    if (!partition->state(s.state).contains(s.x0)) {
        throw ConfigError(fmt::format("x0 = {} is outside state {}",
                                      to_string(s.x0), s.state));
    }
    s.model = std::move(model);
    s.partition = std::move(partition);
    return s;
}

void parse_common_parrep(KeyValueConfig const& cfg, ParRepConfig& c,
                         std::int64_t t_corr, std::int64_t t_phase,
                         std::int64_t t_poll) {
    c.t_corr = positive_int(cfg, "t_corr", t_corr);
    c.t_phase = positive_int(cfg, "t_phase", t_phase);
    c.t_poll = positive_int(cfg, "t_poll", t_poll);
    c.restart_cap = cfg.get_u64("restart_cap", c.restart_cap);
    c.max_poll_cycles = positive_int(cfg, "max_poll_cycles", c.max_poll_cycles);
}

RandomWalkExitSpec parse_randomwalk(KeyValueConfig const& cfg) {
    RandomWalkExitSpec s;
    s.setup = parse_exit_setup(cfg);
    if (s.setup.model->space() != SpaceKind::lattice) {
        throw ConfigError("randomwalk-exit needs a lattice model");
    }
    s.n_replicas = cfg.get_int_list("n_replicas", {10});
    if (s.n_replicas.empty()) throw ConfigError("n_replicas must not be empty");
    for (auto n : s.n_replicas) {
        if (n < 1) throw ConfigError("every n_replicas entry must be >= 1");
    }
    s.t_phase = positive_int(cfg, "t_phase", s.t_phase);
    s.t_poll = positive_int(cfg, "t_poll", s.t_poll);
    s.replications = positive_int(cfg, "replications", s.replications);
    auto const start = cfg.get_string("replica_start", "dephase");
    if (start == "dephase") {
        s.replica_start = ReplicaStart::dephase;
    } else if (start == "exact-qsd") {
        s.replica_start = ReplicaStart::exact_qsd;
    } else {
        throw ConfigError("replica_start must be dephase or exact-qsd, got '" +
                          start + "'");
    }
    s.restart_cap = cfg.get_u64("restart_cap", s.restart_cap);
    s.max_poll_cycles = positive_int(cfg, "max_poll_cycles", s.max_poll_cycles);
    s.level = open_unit(cfg, "level", s.level);
    s.confidence = open_unit(cfg, "confidence", s.confidence);
    return s;
}

DiffusionExitSpec parse_diffusion(KeyValueConfig const& cfg, std::uint64_t seed) {
    DiffusionExitSpec s;
    s.setup = parse_exit_setup(cfg);
    if (!dynamic_cast<EulerMaruyamaModel const*>(s.setup.model.get())) {
        throw ConfigError("diffusion-exit needs the euler-maruyama model");
    }
    s.parrep.n_replicas = positive_int(cfg, "n_replicas", 100);
    parse_common_parrep(cfg, s.parrep, 100, 100, 1);
    s.parrep.seed = seed;
    if (cfg.has("dephase_init")) {
        auto const x = parse_point(cfg.get_string("dephase_init"), *s.setup.model);
        if (!s.setup.exit_state().contains(x)) {
            throw ConfigError("dephase_init is outside the exit state");
        }
        s.parrep.dephase_init.emplace(s.setup.state, x);
    }
    s.replications = positive_int(cfg, "replications", s.replications);
    s.serial_max_steps = positive_int(cfg, "serial_max_steps", s.serial_max_steps);
    s.cdf_points = positive_int(cfg, "cdf_points", s.cdf_points);
    s.confidence = open_unit(cfg, "confidence", s.confidence);
    s.min_overlap = cfg.get_double("min_overlap", s.min_overlap);
    s.min_staircase = cfg.get_double("min_staircase", s.min_staircase);
    return s;
}

Lemma1Spec parse_lemma1(KeyValueConfig const& cfg) {
    Lemma1Spec s;
    s.n_replicas = cfg.get_int_list("n_replicas", s.n_replicas);
    s.t_poll = cfg.get_int_list("t_poll", s.t_poll);
    s.p = cfg.get_double_list("p", s.p);
    s.tolerance = cfg.get_double("tolerance", s.tolerance);
    s.mass = open_unit(cfg, "mass", s.mass);
    s.corrupt = cfg.get_bool("corrupt", s.corrupt);
    if (s.n_replicas.empty() || s.t_poll.empty() || s.p.empty()) {
        throw ConfigError("lemma1-verify needs non-empty n_replicas, t_poll and p");
    }
    for (auto n : s.n_replicas) {
        if (n < 1) throw ConfigError("n_replicas entries must be >= 1");
    }
    for (auto t : s.t_poll) {
        if (t < 1) throw ConfigError("t_poll entries must be >= 1");
    }
    for (auto p : s.p) {
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("p entries must lie in (0, 1)");
    }
    return s;
}

ErrorStudySpec parse_error_study(KeyValueConfig const& cfg) {
    ErrorStudySpec s;
    if (cfg.has("p")) {
        s.p = cfg.get_double_list("p");
    } else {
        // Log-uniform grid from p_min to p_max.
        auto const lo = open_unit(cfg, "p_min", 1e-4);
        auto const hi = open_unit(cfg, "p_max", 0.5);
        auto const count = positive_int(cfg, "p_count", 20);
        if (!(lo <= hi)) throw ConfigError("p_min must not exceed p_max");
        for (std::int64_t i = 0; i < count; ++i) {
            double const f = count == 1 ? 0.0 : double(i) / double(count - 1);
            s.p.push_back(std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))));
        }
    }
    s.n_replicas = cfg.get_int_list(
        "n_replicas", {1, 2, 3, 5, 8, 10, 15, 20, 30, 50, 75, 100, 150, 200, 300,
                       500, 750, 1000, 2000, 5000});
    s.dt = cfg.get_double("dt", s.dt);
    if (!(s.dt > 0.0)) throw ConfigError("dt must be > 0");
    for (auto p : s.p) {
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("p entries must lie in (0, 1)");
    }
    for (auto n : s.n_replicas) {
        if (n < 1) throw ConfigError("n_replicas entries must be >= 1");
    }
    if (s.p.empty() || s.n_replicas.empty()) {
        throw ConfigError("error-study needs a non-empty (p, N) grid");
    }
    return s;
}

ParRepRunSpec parse_parrep_run(KeyValueConfig const& cfg, std::uint64_t seed) {
    ParRepRunSpec s;
    auto model = build_model(cfg);
    auto partition = std::make_shared<StatePartition const>(build_partition(cfg, *model));
    s.x0 = parse_point(cfg.get_string("x0"), *model);
    s.parrep.n_replicas = positive_int(cfg, "n_replicas", 10);
    parse_common_parrep(cfg, s.parrep, 25, 25, 10);
    s.parrep.seed = seed;
    s.parrep.horizon = cfg.get_int("horizon");
    if (s.parrep.horizon < 0) throw ConfigError("horizon must be >= 0");
    for (auto const& key : cfg.keys_with_prefix("dephase_init.")) {
        auto const label = static_cast<StateLabel>(
            std::stoll(key.substr(13)));
        auto const x = parse_point(cfg.get_string(key), *model);
        if (!partition->state(label).contains(x)) {
            throw ConfigError(fmt::format("{} is outside state {}", key, label));
        }
        s.parrep.dephase_init.emplace(label, x);
    }
    s.level = open_unit(cfg, "level", s.level);
    s.model = std::move(model);
    s.partition = std::move(partition);
    return s;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
    for (auto const& k : kKinds) {
        if (k.kind == kind) return k.name;
    }
    return "unknown";
}

ExperimentKind parse_kind(std::string_view name) {
    for (auto const& k : kKinds) {
        if (k.name == name) return k.kind;
    }
    throw ConfigError(fmt::format("unknown experiment kind '{}'", name));
}

ExperimentSpec parse_spec(std::string_view text, std::string source,
                          std::optional<std::uint64_t> seed_override) {
    ExperimentSpec spec{.kind = ExperimentKind::lemma1_verify,
                        .config = KeyValueConfig::parse(text, std::move(source)),
                        .source_text = std::string(text),
                        .body = Lemma1Spec{}};
    auto& cfg = spec.config;
    if (seed_override) cfg.set("seed", std::to_string(*seed_override));
    spec.kind = parse_kind(cfg.get_string("kind"));
    spec.seed = cfg.get_u64("seed", 0);

    try {
        switch (spec.kind) {
            case ExperimentKind::randomwalk_exit:
                spec.body = parse_randomwalk(cfg);
                break;
            case ExperimentKind::diffusion_exit:
                spec.body = parse_diffusion(cfg, spec.seed);
                break;
            case ExperimentKind::lemma1_verify:
                spec.body = parse_lemma1(cfg);
                break;
            case ExperimentKind::error_study:
                spec.body = parse_error_study(cfg);
                break;
            case ExperimentKind::parrep_run:
                spec.body = parse_parrep_run(cfg, spec.seed);
                break;
        }
    } catch (ContractViolation const& e) {
        throw ConfigError(fmt::format("{}: {}", cfg.source(), e.what()));
    }
    cfg.require_all_consumed();
    return spec;
}

ExperimentSpec load_spec(std::filesystem::path const& path,
                         std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open spec file " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_spec(text, path.string(), seed_override);
}

}  // namespace parrep::cli
