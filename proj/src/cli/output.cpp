// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/cli/output.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "parrep/errors.hpp"

namespace parrep::cli {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kManifestVersion = "1";

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string empirical_pmf_csv(std::vector<std::int64_t> const& sample) {
    std::map<std::int64_t, std::int64_t> counts;
    for (auto v : sample) ++counts[v];
    std::string out = "support,prob\n";
    auto const n = double(sample.size());
    if (counts.empty()) return out;
    for (auto z = counts.begin()->first; z <= counts.rbegin()->first; ++z) {
        auto it = counts.find(z);
        out += fmt::format("{},{}\n", z, num(it == counts.end() ? 0.0 : double(it->second) / n));
    }
    return out;
}

std::string empirical_cdf_csv(std::vector<std::int64_t> const& sample) {
    std::map<std::int64_t, std::int64_t> counts;
    for (auto v : sample) ++counts[v];
    std::string out = "t,cdf\n";
    std::int64_t running = 0;
    for (auto const& [t, c] : counts) {
        running += c;
        out += fmt::format("{},{}\n", t, num(double(running) / double(sample.size())));
    }
    return out;
}

Json values_json(NamedValues const& values) {
    Json doc = Json::object();
    for (auto const& [k, v] : values) doc[k] = v;
    return doc;
}

Json partition_json(StatePartition const& partition) {
    Json states = Json::array();
    for (auto const& s : partition.states()) {
        Json st;
        st["label"] = s.label();
        if (s.space() == SpaceKind::lattice) {
            st["lo"] = s.lo();
            st["hi"] = s.hi();
        } else {
            Json box = Json::array();
            for (auto const& iv : s.intervals()) box.push_back({iv.lo, iv.hi});
            st["box"] = box;
        }
        states.push_back(st);
    }
    return states;
}

void describe_model(Json& doc, ChainModel const& model,
                    StatePartition const& partition) {
    doc["model"] = {{"name", std::string(model.name())},
                    {"dimension", model.dimension()}};
    doc["partition"] = partition_json(partition);
}

}  // namespace

std::string git_blob_sha1(std::string_view bytes) {
    std::string payload = fmt::format("blob {}", bytes.size());
    payload.push_back('\0');
    payload.append(bytes);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(payload.data(), payload.size(), md, &len, EVP_sha1(), nullptr) != 1) {
        throw Error("SHA-1 digest failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

//---------------------------------------------------------------------------//

OutputSet render(RandomWalkExitResult const& result) {
    OutputSet files;
    files.push_back({"qsd.json", to_json(result.qsd) + "\n"});
    files.push_back({"exact_tau_pmf.csv", to_csv(result.exact_tau)});

    std::string tau_cdf = "t,cdf\n";
    double running = 0.0;
    for (std::size_t i = 0; i < result.exact_tau.support.size(); ++i) {
        running += result.exact_tau.probs[i];
        tau_cdf += fmt::format("{},{}\n", result.exact_tau.support[i], num(running));
    }
    files.push_back({"tau_cdf.csv", std::move(tau_cdf)});

    std::string counts = "n_replicas,site,count,frequency,oracle,band_low,band_high\n";
    for (auto const& run : result.runs) {
        files.push_back({fmt::format("t_acc_pmf_N{}.csv", run.n_replicas),
                         empirical_pmf_csv(run.t_acc)});
        files.push_back({fmt::format("t_par_cdf_N{}.csv", run.n_replicas),
                         empirical_cdf_csv(run.t_par)});
        for (std::size_t e = 0; e < run.exit_counts.size(); ++e) {
            counts += fmt::format(
                "{},{},{},{},{},{},{}\n", run.n_replicas, result.exit_law.exterior[e],
                run.exit_counts[e],
                num(double(run.exit_counts[e]) / double(run.t_acc.size())),
                num(result.exit_law.probs[static_cast<Eigen::Index>(e)]),
                num(run.exit_bands[e].low), num(run.exit_bands[e].high));
        }
    }
    files.push_back({"exit_counts.csv", std::move(counts)});
    return files;
}

OutputSet render(DiffusionExitResult const& result) {
    OutputSet files;
    std::string cdf =
        "t,serial_cdf,serial_low,serial_high,corrected_cdf,corrected_low,"
        "corrected_high,legacy_cdf,legacy_low,legacy_high\n";
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
        auto const& s = result.serial[i];
        auto const& c = result.corrected[i];
        auto const& l = result.legacy[i];
        cdf += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", num(result.grid[i]),
                           num(s.cdf), num(s.low), num(s.high), num(c.cdf),
                           num(c.low), num(c.high), num(l.cdf), num(l.low),
                           num(l.high));
    }
    files.push_back({"exit_cdf.csv", std::move(cdf)});

    std::string times =
        "replication,serial_steps,corrected_steps,legacy_time,"
        "decorrelation_steps,decorrelation_exit\n";
    for (std::size_t r = 0; r < result.samples.size(); ++r) {
        auto const& s = result.samples[r];
        times += fmt::format("{},{},{},{},{},{}\n", r, s.serial_steps,
                             s.corrected_steps, num(s.legacy_time),
                             s.decorrelation_steps, s.decorrelation_exit ? 1 : 0);
    }
    files.push_back({"exit_times.csv", std::move(times)});
    return files;
}

OutputSet render(Lemma1Result const& result) {
    std::string csv =
        "n_replicas,t_poll,p,z_max,covered_mass,max_deviation,k_max_deviation,"
        "passed\n";
    for (auto const& c : result.cells) {
        csv += fmt::format("{},{},{},{},{},{},{},{}\n", c.n_replicas, c.t_poll,
                           num(c.p), c.z_max, num(c.covered_mass),
                           num(c.max_deviation), num(c.k_max_deviation),
                           c.passed ? "true" : "false");
    }
    return {{"lemma1_matrix.csv", std::move(csv)}};
}

OutputSet render(ErrorStudyResult const& result) {
    std::string csv =
        "p,N,dt,absolute,relative,bound_absolute,bound_relative,prefactor,"
        "bound_ok\n";
    for (auto const& r : result.rows) {
        auto const& e = r.error;
        csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", num(r.p), r.n_replicas,
                           num(r.dt), num(e.absolute), num(e.relative),
                           num(e.bound_absolute), num(e.bound_relative),
                           num(e.prefactor), e.within_bounds() ? "true" : "false");
    }
    return {{"error_study.csv", std::move(csv)}};
}

OutputSet render(ParRepRunResult const& result) {
    OutputSet files;
    std::string traj = "segment_index,label,start_time,length\n";
    auto const segments = result.run.trajectory.segments();
    for (std::size_t i = 0; i < segments.size(); ++i) {
        auto const& s = segments[i];
        traj += fmt::format("{},{},{},{}\n", i, s.label, s.start, s.length);
    }
    files.push_back({"trajectory.csv", std::move(traj)});

    std::string events = "visit_index,state_label,m,k,tau_k,t_acc,t_par\n";
    for (std::size_t i = 0; i < result.run.events.size(); ++i) {
        auto const& e = result.run.events[i];
        events += fmt::format("{},{},{},{},{},{},{}\n", i, e.state, e.m, e.k,
                              e.tau_k, e.t_acc, e.t_par);
    }
    files.push_back({"exit_events.csv", std::move(events)});

    Json diag;
    auto const& d = result.run.diagnostics;
    Json visits = Json::object();
    for (auto const& [label, count] : d.visits) visits[std::to_string(label)] = count;
    Json early = Json::object();
    for (auto const& [label, count] : d.early_exits) early[std::to_string(label)] = count;
    diag["visits"] = visits;
    diag["early_exits"] = early;
    diag["dephasing_restarts"] = d.dephasing_restarts;
    diag["dephasing_steps"] = d.dephasing_steps;
    diag["exact_steps"] = d.exact_steps;
    diag["accelerated_steps"] = d.accelerated_steps;
    diag["parallel_time"] = d.parallel_time;
    files.push_back({"diagnostics.json", diag.dump(2) + "\n"});
    return files;
}

//---------------------------------------------------------------------------//

std::string report_json(ExperimentSpec const& spec, Report const& report) {
    Json doc;
    doc["command"] = std::string(to_string(spec.kind));
    doc["seed"] = spec.seed;
    doc["passed"] = report.passed();
    Json checks = Json::array();
    for (auto const& c : report.checks) {
        checks.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"values", values_json(c.values)}});
    }
    doc["checks"] = checks;
    doc["summary"] = values_json(report.summary);
    return doc.dump(2) + "\n";
}

std::string manifest_json(ExperimentSpec const& spec, OutputSet const& files) {
    Json doc;
    doc["manifest_version"] = std::string(kManifestVersion);
    doc["command"] = std::string(to_string(spec.kind));
    doc["spec_file"] = spec.config.source();
    doc["spec_hash"] = git_blob_sha1(spec.source_text);
    doc["seed"] = spec.seed;
    Json config = Json::object();
    for (auto const& [k, v] : spec.config.entries()) config[k] = v;
    doc["config"] = config;
    std::visit(
        [&](auto const& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, RandomWalkExitSpec> ||
                          std::is_same_v<T, DiffusionExitSpec>) {
                describe_model(doc, *body.setup.model, *body.setup.partition);
                doc["exit_state"] = body.setup.state;
            } else if constexpr (std::is_same_v<T, ParRepRunSpec>) {
                describe_model(doc, *body.model, *body.partition);
            }
        },
        spec.body);
    Json outputs = Json::array();
    for (auto const& f : files) {
        outputs.push_back({{"file", f.name}, {"hash", git_blob_sha1(f.content)}});
    }
    doc["outputs"] = outputs;
    return doc.dump(2) + "\n";
}

void write_outputs(std::filesystem::path const& dir, ExperimentSpec const& spec,
                   OutputSet files, Report const& report) {
    files.push_back({"report.json", report_json(spec, report)});
    auto const manifest = manifest_json(spec, files);
    files.push_back({"manifest.json", manifest});

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw Error(fmt::format("cannot create output directory {}: {}",
                                dir.string(), ec.message()));
    }
    for (auto const& f : files) {
        auto const path = dir / f.name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(f.content.data(), static_cast<std::streamsize>(f.content.size()));
        if (!out) throw Error("cannot write " + path.string());
    }
}

}  // namespace parrep::cli
