// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/qsd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "parrep/errors.hpp"
#include "parrep/worker_pool.hpp"

namespace parrep {
namespace {

constexpr double kRowSumSlack = 1e-12;

bool reaches_all(Eigen::MatrixXd const& adj) {
    auto const n = adj.rows();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        auto const i = stack.back();
        stack.pop_back();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (adj(i, j) > 0.0 && !seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = true;
                stack.push_back(j);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

void check_substochastic(Eigen::MatrixXd const& q) {
    if (q.rows() == 0 || q.rows() != q.cols()) {
        throw ContractViolation(fmt::format(
            "substochastic matrix must be square and non-empty, got {}x{}",
            q.rows(), q.cols()));
    }
    if ((q.array() < 0.0).any() || !q.allFinite()) {
        throw ContractViolation("substochastic matrix has negative entries");
    }
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        double const row = q.row(i).sum();
        if (row > 1.0 + kRowSumSlack) {
            throw ContractViolation(
                fmt::format("row {} sums to {} > 1", i, row));
        }
        if (!(row > 0.0)) {
            throw ContractViolation(fmt::format(
                "row {} has no mass inside the state; no QSD exists", i));
        }
    }
    if (!reaches_all(q) || !reaches_all(q.transpose())) {
        throw ContractViolation("substochastic matrix is not irreducible");
    }
}

}  // namespace

QsdSolution exact_qsd(Eigen::MatrixXd const& q, double tol,
                      std::size_t max_iterations) {
    if (!(tol > 0.0)) throw ContractViolation("tol must be positive");
    check_substochastic(q);

    auto const n = q.rows();
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Constant(n, 1.0 / double(n));
    Eigen::RowVectorXd w(n);
    double residual = std::numeric_limits<double>::infinity();
    double lambda = 0.0;
    std::size_t it = 0;
    for (; it < max_iterations; ++it) {
        w.noalias() = v * q;
        lambda = w.sum();
        residual = (w - lambda * v).lpNorm<1>();
        if (residual <= tol) break;
        v = 0.5 * (w + v);
        v /= v.sum();
    }
    if (residual > tol) {
        throw SolverFailure(
            fmt::format("power iteration did not reach tol {} in {} "
                        "iterations (residual {})",
                        tol, max_iterations, residual),
            residual);
    }
    QsdSolution out;
    out.nu = v.transpose();
    out.p = 1.0 - lambda;
    out.residual = residual;
    out.iterations = it;
    return out;
}

QsdSolution exact_qsd(ChainModel const& model, State const& state,
                      double tol) {
    auto sol = exact_qsd(substochastic_matrix(model, state), tol);
    sol.support = state.points();
    return sol;
}

std::string to_json(QsdSolution const& solution) {
    nlohmann::ordered_json doc;
    doc["support"] = solution.support;
    doc["nu"] = std::vector<double>(solution.nu.data(),
                                    solution.nu.data() + solution.nu.size());
    doc["p"] = solution.p;
    doc["residual"] = solution.residual;
    doc["iterations"] = solution.iterations;
    return doc.dump(2);
}

QsdSolution qsd_from_json(std::string_view text) {
    auto const doc = nlohmann::json::parse(text);
    QsdSolution out;
    out.support = doc.at("support").get<std::vector<std::int64_t>>();
    auto const nu = doc.at("nu").get<std::vector<double>>();
    out.nu = Eigen::Map<Eigen::VectorXd const>(nu.data(),
                                               static_cast<Eigen::Index>(nu.size()));
    out.p = doc.at("p").get<double>();
    out.residual = doc.at("residual").get<double>();
    out.iterations = doc.at("iterations").get<std::size_t>();
    return out;
}

//---------------------------------------------------------------------------//

double convergence_bound(ConvergenceParams const& params, std::int64_t n,
                         double f_sup) {
    if (!(params.delta > 0.0 && params.delta < 1.0)) {
        throw DomainError(
            fmt::format("delta = {} must lie in (0, 1)", params.delta));
    }
    if (params.m < 1) {
        throw DomainError(fmt::format("m = {} must be >= 1", params.m));
    }
    if (n < 0) throw ContractViolation("n must be non-negative");
    if (!(f_sup >= 0.0)) throw ContractViolation("f_sup must be >= 0");
    if (f_sup == 0.0) return 0.0;
    auto const blocks = static_cast<double>(n / params.m);
    return f_sup * 4.0 / params.delta *
           std::pow(1.0 - params.delta * params.delta, blocks);
}

std::optional<ConvergenceParams> minorization_params(Eigen::MatrixXd const& q,
                                                     int m_max) {
    check_substochastic(q);
    Eigen::MatrixXd power = q;
    for (int m = 1; m <= m_max; ++m) {
        if (m > 1) power = power * q;
        double delta = 1.0;
        bool ok = true;
        for (Eigen::Index z = 0; z < power.cols() && ok; ++z) {
            double const hi = power.col(z).maxCoeff();
            double const lo = power.col(z).minCoeff();
            if (hi == 0.0) continue;
            if (lo == 0.0) {
                ok = false;
                break;
            }
            delta = std::min(delta, lo / hi);
        }
        if (ok) {
            return ConvergenceParams{
                m, std::min(delta, std::nextafter(1.0, 0.0))};
        }
    }
    return std::nullopt;
}

double em_overlap_constant(std::span<Interval const> box,
                           GradientField const& grad_v, double beta, double dt,
                           std::size_t grid) {
    if (box.empty()) throw ContractViolation("box must have >= 1 coordinate");
    if (grid < 2) throw ContractViolation("grid must be >= 2");
    if (!(beta > 0.0) || !(dt > 0.0)) {
        throw ContractViolation("beta and dt must be positive");
    }
    constexpr double kInset = 1e-9;
    auto const d = box.size();
    std::size_t count = 1;
    for (std::size_t i = 0; i < d; ++i) {
        if (count > (std::size_t{1} << 24) / grid) {
            throw ContractViolation("em_delta grid too large for dimension");
        }
        count *= grid;
    }

    // Grid points and their drifted images a(x) = x - grad V(x) dt.
    std::vector<double> pts(count * d);
    std::vector<double> drifted(count * d);
    std::vector<double> grad(d);
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::size_t rest = idx;
        for (std::size_t i = 0; i < d; ++i) {
            auto const k = rest % grid;
            rest /= grid;
            double const lo = box[i].lo + kInset;
            double const hi = box[i].hi - kInset;
            pts[idx * d + i] =
                lo + (hi - lo) * static_cast<double>(k) / double(grid - 1);
        }
        std::span<double const> x(&pts[idx * d], d);
        grad_v(x, grad);
        for (std::size_t i = 0; i < d; ++i) {
            drifted[idx * d + i] = x[i] - grad[i] * dt;
        }
    }

    // max over (x, y, z) of |z - a(x)|^2 - |z - a(y)|^2 separates per z into
    // (max over x) - (min over y).
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t iz = 0; iz < count; ++iz) {
        double far = -std::numeric_limits<double>::infinity();
        double near = std::numeric_limits<double>::infinity();
        for (std::size_t ix = 0; ix < count; ++ix) {
            double dist2 = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                double const diff = pts[iz * d + i] - drifted[ix * d + i];
                dist2 += diff * diff;
            }
            far = std::max(far, dist2);
            near = std::min(near, dist2);
        }
        worst = std::max(worst, far - near);
    }
    return std::exp(-worst / (4.0 * dt / beta));
}

ConvergenceParams em_delta(std::span<Interval const> box,
                           GradientField const& grad_v, double beta, double dt,
                           std::size_t grid) {
    double const c = em_overlap_constant(box, grad_v, beta, dt, grid);
    double const delta =
        c * std::pow(4.0 * std::numbers::pi * dt / beta,
                     -0.5 * static_cast<double>(box.size()));
    if (!(delta > 0.0 && delta < 1.0)) {
        throw DegenerateBound(
            fmt::format("minorization constant delta = {} is outside (0, 1)",
                        delta),
            delta);
    }
    return {1, delta};
}

ConvergenceParams em_delta(EulerMaruyamaModel const& model, State const& state,
                           std::size_t grid) {
    if (state.space() != SpaceKind::real ||
        state.intervals().size() != model.dimension()) {
        throw ContractViolation("state does not match the model's dimension");
    }
    return em_delta(state.intervals(), model.gradient(), model.beta(),
                    model.dt(), grid);
}

//---------------------------------------------------------------------------//

DephasedReplicas dephase_rejection(ChainModel const& model, State const& state,
                                   ChainPoint const& init, std::int64_t t_phase,
                                   std::span<RngStream> rngs,
                                   DephasingOptions const& options) {
    model.check_point(init);
    if (!state.contains(init)) {
        throw ContractViolation(
            fmt::format("dephasing start {} is not in state {}",
                        to_string(init), state.label()));
    }
    if (t_phase < 1) throw ContractViolation("t_phase must be >= 1");
    if (rngs.empty()) throw ContractViolation("need at least one replica");

    auto const n = rngs.size();
    DephasedReplicas out;
    out.positions.assign(n, init);
    out.restarts.assign(n, 0);
    std::vector<std::uint64_t> steps(n, 0);

    auto run_replica = [&](std::size_t j) {
        auto& x = out.positions[j];
        auto& rng = rngs[j];
        std::int64_t inside = 0;
        while (inside < t_phase) {
            model.advance(x, rng);
            ++steps[j];
            if (state.contains(x)) {
                ++inside;
                continue;
            }
            if (++out.restarts[j] > options.restart_cap) {
                throw DephasingAborted(
                    fmt::format("replica {} exceeded {} dephasing restarts in "
                                "state {}",
                                j + 1, options.restart_cap, state.label()),
                    j + 1, out.restarts[j]);
            }
            x = init;
            inside = 0;
        }
    };

    if (options.pool) {
        options.pool->parallel_for(n, run_replica);
    } else {
        for (std::size_t j = 0; j < n; ++j) run_replica(j);
    }
    for (auto s : steps) out.steps += s;
    return out;
}

//---------------------------------------------------------------------------//

ExitLaw exit_law_from_qsd(Eigen::MatrixXd const& q, ExitMap const& exits,
                          Eigen::VectorXd const& nu) {
    if (q.rows() != q.cols() || q.rows() != nu.size() ||
        exits.probs.rows() != q.rows() ||
        exits.probs.cols() != static_cast<Eigen::Index>(exits.exterior.size())) {
        throw ContractViolation("exit_law_from_qsd: inconsistent dimensions");
    }
    ExitLaw out;
    out.p = 1.0 - (nu.transpose() * q).sum();
    Eigen::VectorXd const flux = (nu.transpose() * exits.probs).transpose();
    double const total = flux.sum();
    if (!(total > 0.0)) {
        throw ContractViolation("no exit mass from the given distribution");
    }
    out.exterior = exits.exterior;
    out.probs = flux / total;
    return out;
}

}  // namespace parrep
