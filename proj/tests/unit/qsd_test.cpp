// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/qsd.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include <gtest/gtest.h>
#include <json.hpp>

#include "parrep/analysis.hpp"
#include "parrep/errors.hpp"
#include "parrep/worker_pool.hpp"

namespace parrep {
namespace {

std::string read_fixture(char const* name) {
    std::ifstream in(std::string(PARREP_TEST_DATA_DIR) + "/" + name);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Eigen::MatrixXd three_point() {
    Eigen::MatrixXd q(3, 3);
    q << 0.0, 0.75, 0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.75, 0.0;
    return q;
}

TEST(ExactQsd, RandomWalkMatchesEigendecompositionFixture) {
    auto const fixture = nlohmann::json::parse(read_fixture("randomwalk_qsd.json"));
    RandomWalkModel model;
    auto const sol = exact_qsd(model, State::lattice(0, -5, 5));
    EXPECT_NEAR(sol.p, 0.00079648052971204031, 1e-13);
    EXPECT_NEAR(sol.p, fixture["p"].get<double>(), 1e-13);
    auto const nu = fixture["nu"].get<std::vector<double>>();
    ASSERT_EQ(sol.nu.size(), 11);
    for (std::size_t i = 0; i < nu.size(); ++i) {
        EXPECT_NEAR(sol.nu[static_cast<Eigen::Index>(i)], nu[i], 1e-11);
    }
    EXPECT_EQ(sol.support, fixture["support"].get<std::vector<std::int64_t>>());
    EXPECT_LE(sol.residual, 1e-12);
    EXPECT_NEAR(sol.nu.sum(), 1.0, 1e-14);
}

TEST(ExactQsd, IsLeftEigenvector) {
    auto const q = three_point();
    auto const sol = exact_qsd(q);
    Eigen::RowVectorXd const lhs = sol.nu.transpose() * q;
    Eigen::RowVectorXd const rhs = (1.0 - sol.p) * sol.nu.transpose();
    EXPECT_LE((lhs - rhs).lpNorm<1>(), 1e-12);
    EXPECT_NEAR(sol.p, 0.10685017607655467, 1e-12);
}

TEST(ExactQsd, PeriodicMatrixStillConverges) {
    // Period-2 chain: plain power iteration would oscillate.
    Eigen::MatrixXd q(2, 2);
    q << 0.0, 0.9, 0.5, 0.0;
    auto const sol = exact_qsd(q);
    EXPECT_NEAR(1.0 - sol.p, std::sqrt(0.45), 1e-12);
}

TEST(ExactQsd, ContractViolations) {
    Eigen::MatrixXd rect(2, 3);
    rect.setZero();
    EXPECT_THROW(exact_qsd(rect), ContractViolation);
    Eigen::MatrixXd negative(2, 2);
    negative << 0.5, -0.1, 0.2, 0.3;
    EXPECT_THROW(exact_qsd(negative), ContractViolation);
    Eigen::MatrixXd overfull(1, 1);
    overfull << 1.5;
    EXPECT_THROW(exact_qsd(overfull), ContractViolation);
    Eigen::MatrixXd reducible(2, 2);
    reducible << 0.5, 0.0, 0.0, 0.5;
    EXPECT_THROW(exact_qsd(reducible), ContractViolation);
    // A single point the walk always leaves carries no mass inside.
    EXPECT_THROW(exact_qsd(RandomWalkModel{}, State::lattice(0, 5, 5)),
                 ContractViolation);
}

TEST(ExactQsd, SolverFailureReportsResidual) {
    try {
        exact_qsd(substochastic_matrix(RandomWalkModel{}, State::lattice(0, -5, 5)),
                  1e-15, 3);
        FAIL() << "expected SolverFailure";
    } catch (SolverFailure const& e) {
        EXPECT_GT(e.residual(), 1e-15);
    }
}

TEST(ExactQsd, JsonRoundTrip) {
    auto const sol = exact_qsd(RandomWalkModel{}, State::lattice(0, -2, 2));
    auto const back = qsd_from_json(to_json(sol));
    EXPECT_EQ(back.support, sol.support);
    EXPECT_EQ(back.p, sol.p);
    for (Eigen::Index i = 0; i < sol.nu.size(); ++i) EXPECT_EQ(back.nu[i], sol.nu[i]);
}

//---------------------------------------------------------------------------//

TEST(ExitFromQsd, GeometricSurvivalAndIndependence) {
    RandomWalkModel model;
    auto const state = State::lattice(0, -5, 5);
    auto const q = substochastic_matrix(model, state);
    auto const exits = exit_map(model, state);
    auto const sol = exact_qsd(q);
    auto const law = exit_law_from_qsd(q, exits, sol.nu);
    EXPECT_NEAR(law.p, sol.p, 1e-15);
    EXPECT_NEAR(law.probs[0], 0.5, 1e-12);

    Eigen::RowVectorXd v = sol.nu.transpose();
    for (int n = 1; n <= 50; ++n) {
        Eigen::RowVectorXd const joint = v * exits.probs;  // P(tau = n, X_tau = e)
        for (Eigen::Index e = 0; e < joint.size(); ++e) {
            double const product =
                std::pow(1.0 - sol.p, n - 1) * sol.p * law.probs[e];
            EXPECT_NEAR(joint[e], product, 1e-10);
        }
        v = v * q;
        EXPECT_NEAR(v.sum(), std::pow(1.0 - sol.p, n), 1e-10);
    }
}

//---------------------------------------------------------------------------//

TEST(ConvergenceBound, ClosedForm) {
    ConvergenceParams const params{2, 0.5};
    EXPECT_DOUBLE_EQ(convergence_bound(params, 0, 1.0), 8.0);
    EXPECT_DOUBLE_EQ(convergence_bound(params, 5, 2.0), 16.0 * std::pow(0.75, 2));
    EXPECT_EQ(convergence_bound(params, 5, 0.0), 0.0);
    EXPECT_THROW(convergence_bound({1, 1.0}, 1, 1.0), DomainError);
    EXPECT_THROW(convergence_bound({1, 0.0}, 1, 1.0), DomainError);
    EXPECT_THROW(convergence_bound({0, 0.5}, 1, 1.0), DomainError);
    EXPECT_THROW(convergence_bound(params, -1, 1.0), ContractViolation);
    EXPECT_THROW(convergence_bound(params, 1, -1.0), ContractViolation);
}

TEST(Minorization, ThreePointState) {
    auto const params = minorization_params(three_point());
    ASSERT_TRUE(params.has_value());
    EXPECT_EQ(params->m, 2);
    EXPECT_NEAR(params->delta, 9.0 / 22.0, 1e-15);
}

TEST(Minorization, BoundHoldsOnThreePointState) {
    auto const q = three_point();
    auto const params = *minorization_params(q);
    auto const nu = exact_qsd(q).nu;
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(3, 3);
    for (int n = 1; n <= 100; ++n) {
        power = power * q;
        for (Eigen::Index x = 0; x < 3; ++x) {
            Eigen::VectorXd const cond = power.row(x).transpose() / power.row(x).sum();
            EXPECT_LE((cond - nu).lpNorm<1>(), convergence_bound(params, n, 1.0));
        }
    }
}

TEST(Minorization, PositiveMatrixNeedsOneStep) {
    Eigen::MatrixXd q(2, 2);
    q << 0.2, 0.4, 0.3, 0.3;
    auto const params = minorization_params(q);
    ASSERT_TRUE(params);
    EXPECT_EQ(params->m, 1);
    EXPECT_NEAR(params->delta, std::min(0.2 / 0.3, 0.3 / 0.4), 1e-15);
}

//---------------------------------------------------------------------------//

TEST(EmDelta, FlatPotentialFrozenValue) {
    std::vector<Interval> const box{{-1.0, 1.0}};
    EXPECT_NEAR(em_overlap_constant(box, flat_gradient(), 1.0, 0.01, 101) /
                    3.7200767200361143e-44,
                1.0, 1e-9);
    auto const params = em_delta(box, flat_gradient(), 1.0, 0.01, 101);
    EXPECT_EQ(params.m, 1);
    EXPECT_NEAR(params.delta / 1.0494142677214392e-43, 1.0, 1e-9);
}

TEST(EmDelta, SineWellFrozenValue) {
    EulerMaruyamaModel const model(1, sine_well_gradient(2.0 * std::numbers::pi),
                                   1.0, 0.01);
    auto const params = em_delta(model, State::box(0, {{-1.0, 1.0}}), 101);
    EXPECT_NEAR(params.delta / 1.0494142884360417e-43, 1.0, 1e-9);
}

TEST(EmDelta, VanishingWidthLimit) {
    std::vector<Interval> const box{{-1e-6, 1e-6}};
    auto const params = em_delta(box, flat_gradient(), 1.0, 1.0, 5);
    EXPECT_NEAR(params.delta, 1.0 / std::sqrt(4.0 * std::numbers::pi), 1e-9);
}

TEST(EmDelta, DegenerateBoundIsNotClamped) {
    std::vector<Interval> const box{{-1e-6, 1e-6}};
    try {
        em_delta(box, flat_gradient(), 1.0, 0.01, 5);
        FAIL() << "expected DegenerateBound";
    } catch (DegenerateBound const& e) {
        EXPECT_GT(e.delta(), 1.0);
    }
}

TEST(EmDelta, MatchesTripleLoopOracle) {
    std::vector<Interval> const box{{-0.5, 0.7}};
    auto const grad = sine_well_gradient(3.0);
    double const beta = 2.0, dt = 0.05;
    std::size_t const grid = 21;
    std::vector<double> pts, drift;
    for (std::size_t i = 0; i < grid; ++i) {
        double const lo = box[0].lo + 1e-9, hi = box[0].hi - 1e-9;
        double const x = lo + (hi - lo) * double(i) / double(grid - 1);
        double g = 0.0;
        grad(std::span<double const>(&x, 1), std::span<double>(&g, 1));
        pts.push_back(x);
        drift.push_back(x - g * dt);
    }
    double worst = -1e300;
    for (double z : pts) {
        for (double ax : drift) {
            for (double ay : drift) {
                worst = std::max(worst, (z - ax) * (z - ax) - (z - ay) * (z - ay));
            }
        }
    }
    EXPECT_NEAR(em_overlap_constant(box, grad, beta, dt, grid),
                std::exp(-worst / (4.0 * dt / beta)), 1e-15);
}

//---------------------------------------------------------------------------//

std::vector<RngStream> streams(std::uint64_t seed, std::size_t n, std::uint64_t sub) {
    std::vector<RngStream> out;
    for (std::size_t j = 1; j <= n; ++j) out.emplace_back(seed, j, sub);
    return out;
}

TEST(Dephasing, ReplicasEndInsideAndAreIndependentOfPool) {
    RandomWalkModel model;
    auto const state = State::lattice(0, -5, 5);
    auto a = streams(3, 16, 0);
    auto b = streams(3, 16, 0);
    auto const seq = dephase_rejection(model, state, lattice_point(0), 25, a);
    WorkerPool pool(4);
    auto const par = dephase_rejection(model, state, lattice_point(0), 25, b,
                                       {.restart_cap = 1'000'000, .pool = &pool});
    EXPECT_EQ(seq.positions, par.positions);
    EXPECT_EQ(seq.restarts, par.restarts);
    EXPECT_EQ(seq.steps, par.steps);
    for (auto const& x : seq.positions) EXPECT_TRUE(state.contains(x));
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(a[j].draws(), b[j].draws());
}

TEST(Dephasing, StepCountIsPhaseTimesReplicasWithoutRestarts) {
    LatticeKernelModel stay("stay", [](std::int64_t i) {
        return std::vector<Transition>{{i, 1.0}};
    });
    auto s = streams(1, 4, 0);
    auto const out = dephase_rejection(stay, State::lattice(0, 0, 3), lattice_point(2), 7, s);
    EXPECT_EQ(out.steps, 28u);
    for (auto r : out.restarts) EXPECT_EQ(r, 0u);
}

TEST(Dephasing, AbortsPastRestartCap) {
    auto s = streams(1, 2, 0);
    try {
        dephase_rejection(RandomWalkModel{}, State::lattice(0, 5, 5), lattice_point(5),
                          3, s, {.restart_cap = 10});
        FAIL() << "expected DephasingAborted";
    } catch (DephasingAborted const& e) {
        EXPECT_EQ(e.replica(), 1u);
        EXPECT_EQ(e.restarts(), 11u);
    }
}

TEST(Dephasing, RejectsStartOutsideState) {
    auto s = streams(1, 2, 0);
    EXPECT_THROW(dephase_rejection(RandomWalkModel{}, State::lattice(0, -5, 5),
                                   lattice_point(9), 3, s),
                 ContractViolation);
}

// Long dephasing from the origin reproduces nu: the bias after 50 steps is
// far below what 2e4 samples can detect.
TEST(Dephasing, LongPhaseSamplesQsd) {
    RandomWalkModel model;
    auto const state = State::lattice(0, -5, 5);
    auto const sol = exact_qsd(model, state);
    std::vector<std::int64_t> sample;
    for (std::uint64_t r = 0; r < 20000; ++r) {
        auto s = streams(99, 1, r);
        auto const out = dephase_rejection(model, state, lattice_point(0), 50, s);
        sample.push_back(std::get<LatticePoint>(out.positions[0]).site);
    }
    Pmf ref;
    ref.support = sol.support;
    ref.probs.assign(sol.nu.data(), sol.nu.data() + sol.nu.size());
    auto const rep = compare_distributions(sample, ref, GofMethod::chi_square, 0.01);
    EXPECT_TRUE(rep.passed) << rep.statistic << " > " << rep.threshold;
}

}  // namespace
}  // namespace parrep
