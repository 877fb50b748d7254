// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "parrep/chain.hpp"
#include "parrep/rng.hpp"

namespace parrep {

class WorkerPool;

/// Quasistationary distribution of a finite substochastic matrix Q.
///
/// nu is the normalized non-negative left principal eigenvector,
/// nu^T Q = (1 - p) nu^T, and p = P^nu(X_1 outside S). `support` lists the
/// lattice sites of the entries when the solution came from a State.
struct QsdSolution {
    Eigen::VectorXd nu;
    double p = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    std::vector<std::int64_t> support;
};

/// Power iteration with renormalization on the lazy matrix (Q + I) / 2,
/// which has the same principal left eigenvector as Q but no periodicity.
/// Stops once ||nu^T Q - (1 - p) nu^T||_1 <= tol.
///
/// Q must be square, non-negative, with row sums <= 1, irreducible, and every
/// row must keep some mass inside S. Throws ContractViolation otherwise and
/// SolverFailure (with the last residual) if max_iterations is exhausted.
QsdSolution exact_qsd(Eigen::MatrixXd const& q, double tol = 1e-12,
                      std::size_t max_iterations = 1'000'000);

QsdSolution exact_qsd(ChainModel const& model, State const& state,
                      double tol = 1e-12);

/// {"support": [...], "nu": [...], "p": .., "residual": .., "iterations": ..}
std::string to_json(QsdSolution const& solution);
QsdSolution qsd_from_json(std::string_view text);

//---------------------------------------------------------------------------//

/// Minorization constants (m, delta): for all x, y in S and f >= 0,
/// E^x[f(X_m) 1{tau > m}] >= delta E^y[f(X_m) 1{tau > m}].
struct ConvergenceParams {
    int m = 1;
    double delta = 0.5;
};

/// ||f||_inf * 4 / delta * (1 - delta^2)^floor(n / m). Throws DomainError if
/// delta is outside (0, 1) or m < 1, ContractViolation if f_sup < 0.
double convergence_bound(ConvergenceParams const& params, std::int64_t n,
                         double f_sup);

/// Checks the minorization condition directly on a finite matrix: returns the
/// smallest m <= m_max at which every column of Q^m is either zero or
/// entrywise positive, together with
/// delta = min over nonzero columns z of min_x Q^m[x,z] / max_y Q^m[y,z]. A delta of exactly 1 (e.g. a
/// single point) is reported as the largest double below 1, since every
/// smaller delta also satisfies the condition.
std::optional<ConvergenceParams> minorization_params(Eigen::MatrixXd const& q,
                                                     int m_max = 64);

/// C = min over x, y, z in the box of
///     exp(-(|z - a(x)|^2 - |z - a(y)|^2) / (4 dt / beta)),  a(x) = x - grad V(x) dt,
/// evaluated on a uniform grid with `grid` points per coordinate (endpoints
/// moved inward by 1e-9 so they stay inside the open box).
double em_overlap_constant(std::span<Interval const> box,
                           GradientField const& grad_v, double beta, double dt,
                           std::size_t grid);

/// (m, delta) = (1, C (4 pi dt / beta)^(-d/2)) for the Euler-Maruyama chain.
/// Throws DegenerateBound if delta falls outside (0, 1).
ConvergenceParams em_delta(std::span<Interval const> box,
                           GradientField const& grad_v, double beta, double dt,
                           std::size_t grid);
ConvergenceParams em_delta(EulerMaruyamaModel const& model, State const& state,
                           std::size_t grid);

//---------------------------------------------------------------------------//

struct DephasingOptions {
    /// Per-replica cap on restarts before DephasingAborted is thrown.
    std::uint64_t restart_cap = 1'000'000;
    WorkerPool const* pool = nullptr;
};

struct DephasedReplicas {
    std::vector<ChainPoint> positions;
    std::vector<std::uint64_t> restarts;
    std::uint64_t steps = 0;
};

/// Rejection dephasing: each replica starts at `init` and is teleported back
/// to `init` (counter reset, stream continuing) whenever it leaves the state;
/// it stops after t_phase consecutive steps inside. Replica j advances only
/// rngs[j]; results are ordered by replica index.
DephasedReplicas dephase_rejection(ChainModel const& model, State const& state,
                                   ChainPoint const& init, std::int64_t t_phase,
                                   std::span<RngStream> rngs,
                                   DephasingOptions const& options = {});

//---------------------------------------------------------------------------//

/// Exit law from the QSD: p = 1 - nu^T Q 1 and the law of X_tau, which is the
/// one-step exit distribution from nu renormalized.
struct ExitLaw {
    double p = 0.0;
    std::vector<std::int64_t> exterior;
    Eigen::VectorXd probs;
};

ExitLaw exit_law_from_qsd(Eigen::MatrixXd const& q, ExitMap const& exits,
                          Eigen::VectorXd const& nu);

}  // namespace parrep
