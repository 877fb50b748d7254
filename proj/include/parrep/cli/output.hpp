// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "parrep/cli/experiments.hpp"
#include "parrep/cli/spec_file.hpp"

namespace parrep::cli {

struct OutputFile {
    std::string name;
    std::string content;
};

using OutputSet = std::vector<OutputFile>;

/// SHA-1 of "blob <size>\0<bytes>", as printed by `git hash-object`.
std::string git_blob_sha1(std::string_view bytes);

// CSV layouts (header line first, fixed column order):
//   trajectory.csv       segment_index,label,start_time,length
//   exit_events.csv      visit_index,state_label,m,k,tau_k,t_acc,t_par
//   *_pmf*.csv           support,prob
//   *_cdf*.csv           t,cdf
//   exit_counts.csv      n_replicas,site,count,frequency,oracle,band_low,
//                        band_high
//   exit_cdf.csv         t,{serial,corrected,legacy}_{cdf,low,high}
//   exit_times.csv       replication,serial_steps,corrected_steps,
//                        legacy_time,decorrelation_steps,decorrelation_exit
//   lemma1_matrix.csv    n_replicas,t_poll,p,z_max,covered_mass,
//                        max_deviation,k_max_deviation,passed
//   error_study.csv      p,N,dt,absolute,relative,bound_absolute,
//                        bound_relative,prefactor,bound_ok

OutputSet render(RandomWalkExitResult const& result);
OutputSet render(DiffusionExitResult const& result);
OutputSet render(Lemma1Result const& result);
OutputSet render(ErrorStudyResult const& result);
OutputSet render(ParRepRunResult const& result);

std::string report_json(ExperimentSpec const& spec, Report const& report);

/// Run manifest: command, effective config, model and partition, seed, and
/// content hashes of the spec file and of every data file.
std::string manifest_json(ExperimentSpec const& spec, OutputSet const& files);

/// Writes every file plus report.json and manifest.json into `dir`,
/// creating it if needed.
void write_outputs(std::filesystem::path const& dir, ExperimentSpec const& spec,
                   OutputSet files, Report const& report);

}  // namespace parrep::cli
