// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/analysis.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "parrep/chain.hpp"
#include "parrep/engine.hpp"
#include "parrep/errors.hpp"
#include "parrep/rng.hpp"

namespace parrep {
namespace {

Pmf read_pmf_fixture(char const* name) {
    std::ifstream in(std::string(PARREP_TEST_DATA_DIR) + "/" + name);
    std::string line;
    std::getline(in, line);
    Pmf out;
    while (std::getline(in, line)) {
        auto const comma = line.find(',');
        out.support.push_back(std::stoll(line.substr(0, comma)));
        out.probs.push_back(std::stod(line.substr(comma + 1)));
    }
    return out;
}

std::vector<std::int64_t> geometric_sample(double p, std::size_t n, std::uint64_t seed) {
    RngStream rng(seed, 0);
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(1 + static_cast<std::int64_t>(
                              std::floor(std::log(rng.uniform_open()) / std::log1p(-p))));
    }
    return out;
}

TEST(Pmf, Accessors) {
    auto const g = geometric_pmf(0.25, 40);
    EXPECT_NEAR(g.mass() + g.tail, 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(g.prob_at(1), 0.25);
    EXPECT_DOUBLE_EQ(g.prob_at(2), 0.25 * 0.75);
    EXPECT_EQ(g.prob_at(0), 0.0);
    EXPECT_EQ(g.prob_at(41), 0.0);
    EXPECT_TRUE(g.covers(1e-4));
    EXPECT_FALSE(g.covers(1e-6));
    EXPECT_THROW(geometric_pmf(0.0, 5), DomainError);
    EXPECT_THROW(geometric_pmf(1.0, 5), DomainError);
}

TEST(ExitTimePmf, MatchesFixtureFromOrigin) {
    auto const fixture = read_pmf_fixture("randomwalk_exit_pmf_from_0.csv");
    RandomWalkModel model;
    auto const q = substochastic_matrix(model, State::lattice(0, -5, 5));
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(11);
    mu[5] = 1.0;
    auto const pmf = exit_time_pmf_exact(q, mu, 200);
    ASSERT_EQ(pmf.support, fixture.support);
    for (std::size_t i = 0; i < 200; ++i) EXPECT_NEAR(pmf.probs[i], fixture.probs[i], 1e-15);
    EXPECT_NEAR(pmf.mass() + pmf.tail, 1.0, 1e-13);
}

TEST(ExitTimePmf, AgreesWithSerialSampling) {
    RandomWalkModel model;
    auto const state = State::lattice(0, -2, 2);
    auto const q = substochastic_matrix(model, state);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(5);
    mu[2] = 1.0;
    std::vector<std::int64_t> sample;
    for (std::uint64_t r = 0; r < 200000; ++r) {
        RngStream rng(31, 0, r);
        sample.push_back(sample_exit_serial(model, state, lattice_point(0), rng, 1 << 20).tau);
    }
    auto const top = *std::max_element(sample.begin(), sample.end());
    auto const rep = compare_distributions(sample, exit_time_pmf_exact(q, mu, top),
                                           GofMethod::chi_square, 0.01);
    EXPECT_TRUE(rep.passed) << rep.statistic << " > " << rep.threshold;
}

//---------------------------------------------------------------------------//

// Brute force over tuples (tau_1..tau_N) of i.i.d. geometric exit times, with
// the last value standing for {tau >= L}; that lump never wins for z <= z_max.
std::vector<long double> brute_force_accelerated_time(int n, int t_poll, long double p,
                                            int z_max, int lump) {
    std::vector<long double> acc(static_cast<std::size_t>(z_max) + 1, 0.0L);
    long double const q = 1.0L - p;
    auto weight = [&](int t) { return t < lump ? p * std::pow(q, t - 1) : std::pow(q, lump - 1); };
    std::vector<int> tau(static_cast<std::size_t>(n), 1);
    while (true) {
        long double prob = 1.0L;
        int best_m = 1 << 30, best_k = 0;
        for (int j = 0; j < n; ++j) {
            prob *= weight(tau[static_cast<std::size_t>(j)]);
            int const m = (tau[static_cast<std::size_t>(j)] + t_poll - 1) / t_poll;
            if (m < best_m) {
                best_m = m;
                best_k = j + 1;
            }
        }
        int const z = (n - 1) * (best_m - 1) * t_poll + (best_k - 1) * t_poll +
                      tau[static_cast<std::size_t>(best_k - 1)];
        if (z <= z_max) acc[static_cast<std::size_t>(z)] += prob;
        int j = 0;
        while (j < n && ++tau[static_cast<std::size_t>(j)] > lump) {
            tau[static_cast<std::size_t>(j)] = 1;
            ++j;
        }
        if (j == n) break;
    }
    return acc;
}

TEST(AcceleratedTimeLaw, MatchesTupleEnumeration) {
    auto const brute = brute_force_accelerated_time(3, 2, 0.3L, 60, 70);
    auto const pmf = lemma1_pmf(3, 2, 0.3, 60);
    auto const geo = geometric_pmf(0.3, 60);
    for (int z = 1; z <= 60; ++z) {
        EXPECT_NEAR(pmf.probs[z - 1], static_cast<double>(brute[z]), 1e-15) << z;
        EXPECT_NEAR(static_cast<double>(brute[z]), geo.probs[z - 1], 1e-15) << z;
    }
}

TEST(AcceleratedTimeLaw, IdentityAcrossGrid) {
    for (int n : {1, 2, 3, 5}) {
        for (int t_poll : {1, 2, 3}) {
            for (double p : {0.1, 0.3, 0.7}) {
                auto const z_max = static_cast<std::int64_t>(
                    std::ceil(std::log(1e-9) / std::log1p(-p)));
                auto const pmf = lemma1_pmf(n, t_poll, p, z_max);
                auto const geo = geometric_pmf(p, z_max);
                EXPECT_GE(pmf.mass(), 1.0 - 1e-9);
                for (std::size_t i = 0; i < pmf.probs.size(); ++i) {
                    ASSERT_NEAR(pmf.probs[i], geo.probs[i], 1e-12);
                }
            }
        }
    }
}

TEST(AcceleratedTimeLaw, LegacyRuleIsNotGeometric) {
    auto const pmf = lemma1_pmf(3, 1, 0.3, 60, AcceleratedTimeRule::legacy);
    auto const geo = geometric_pmf(0.3, 60);
    double worst = 0.0;
    for (std::size_t i = 0; i < 60; ++i) worst = std::max(worst, std::abs(pmf.probs[i] - geo.probs[i]));
    EXPECT_GT(worst, 1e-2);
    EXPECT_EQ(pmf.prob_at(1), 0.0);  // N tau_K is a multiple of N
}

TEST(AcceleratedTimeLaw, KMarginalMatchesClosedForm) {
    for (int t_poll : {1, 2, 3}) {
        double const p = 0.2;
        auto const k = lemma1_k_marginal(4, t_poll, p);
        auto const ref = k_distribution(4, -std::expm1(t_poll * std::log1p(-p)));
        for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(k.probs[i], ref.probs[i], 1e-14);
    }
    auto const k = k_distribution(3, 0.5);
    EXPECT_NEAR(k.probs[0], 0.5 / 0.875, 1e-15);
    EXPECT_NEAR(k.probs[2], 0.125 / 0.875, 1e-15);
    EXPECT_NEAR(k.mass(), 1.0, 1e-15);
}

//---------------------------------------------------------------------------//

TEST(LegacyError, SingleReplicaIsExact) {
    auto const e = legacy_error(1, 0.37, 0.01);
    EXPECT_EQ(e.absolute, 0.0);
    EXPECT_EQ(e.relative, 0.0);
    EXPECT_EQ(e.prefactor, 0.0);
    EXPECT_TRUE(e.within_bounds());
}

// Reference values by 60-digit decimal arithmetic.
TEST(LegacyError, FrozenValues) {
    auto const a = legacy_error(100, 1e-3, 0.01);
    EXPECT_NEAR(a.absolute, 0.50333527838637626, 1e-12);
    EXPECT_NEAR(a.relative, 0.050333527838637628, 1e-12);
    EXPECT_LE(a.relative, 0.1);
    auto const b = legacy_error(1000, 0.001621469462, 0.01);
    EXPECT_NEAR(b.absolute, 6.2914575681246792, 1e-10);
    EXPECT_NEAR(b.relative, 1.0201406318182951, 1e-10);
    EXPECT_TRUE(b.within_bounds());
    auto const c = legacy_error(7, 0.3, 0.5);
    EXPECT_NEAR(c.absolute, 2.1474415452499804, 1e-13);
    EXPECT_NEAR(c.relative, 1.2884649271499882, 1e-13);
}

TEST(LegacyError, AbsoluteErrorIsMeanOfNMinusK) {
    for (int n : {2, 5, 40}) {
        for (double p : {0.01, 0.2, 0.6}) {
            double const dt = 0.1;
            auto const k = k_distribution(n, p);
            double expected = 0.0;
            for (std::size_t i = 0; i < k.probs.size(); ++i) {
                expected += dt * double(n - k.support[i]) * k.probs[i];
            }
            EXPECT_NEAR(legacy_error(n, p, dt).absolute, expected, 1e-12);
        }
    }
}

TEST(LegacyError, PrefactorConsistency) {
    for (int n : {1, 2, 10, 1000, 100000}) {
        for (double p : {1e-6, 1e-3, 0.1, 0.9}) {
            auto const e = legacy_error(n, p, 0.01);
            EXPECT_GE(e.prefactor, 0.0);
            EXPECT_LE(e.prefactor, 1.0);
            EXPECT_NEAR(e.absolute, e.bound_absolute * e.prefactor, 1e-9 * e.bound_absolute);
            EXPECT_NEAR(e.relative, e.bound_relative * e.prefactor, 1e-9 * e.bound_relative);
            EXPECT_TRUE(e.within_bounds());
        }
    }
    EXPECT_NEAR(relative_error_prefactor(0.5, 1 << 20), 1.0, 1e-5);
    EXPECT_THROW(relative_error_prefactor(1.0, 3), DomainError);
    EXPECT_THROW(legacy_error(0, 0.5, 0.01), DomainError);
    EXPECT_THROW(legacy_error(2, 0.5, 0.0), DomainError);
    EXPECT_THROW(legacy_error(2, 1.5, 0.01), DomainError);
}

//---------------------------------------------------------------------------//

TEST(ClopperPearson, FrozenAndEdgeCases) {
    auto const ci = clopper_pearson(5, 10, 0.95);
    EXPECT_NEAR(ci.low, 0.18708602844739858, 1e-12);
    EXPECT_NEAR(ci.high, 0.81291397155260148, 1e-12);
    auto const zero = clopper_pearson(0, 20, 0.95);
    EXPECT_EQ(zero.low, 0.0);
    EXPECT_NEAR(zero.high, 1.0 - std::pow(0.025, 1.0 / 20.0), 1e-12);
    auto const all = clopper_pearson(20, 20, 0.95);
    EXPECT_EQ(all.high, 1.0);
    EXPECT_NEAR(all.low, std::pow(0.025, 1.0 / 20.0), 1e-12);
    EXPECT_THROW(clopper_pearson(3, 2, 0.95), ContractViolation);
    EXPECT_THROW(clopper_pearson(1, 2, 1.0), DomainError);
}

TEST(GoodnessOfFit, AcceptsMatchingSample) {
    auto const sample = geometric_sample(0.05, 50000, 1);
    auto const ref = geometric_pmf(0.05, 400);
    for (auto method : {GofMethod::chi_square, GofMethod::ks, GofMethod::max_band}) {
        auto const rep = compare_distributions(sample, ref, method, 0.01);
        EXPECT_TRUE(rep.passed) << rep.method << " " << rep.statistic;
        EXPECT_EQ(rep.samples, 50000);
    }
}

TEST(GoodnessOfFit, RejectsWrongParameter) {
    auto const sample = geometric_sample(0.055, 50000, 2);
    auto const ref = geometric_pmf(0.05, 400);
    for (auto method : {GofMethod::chi_square, GofMethod::ks, GofMethod::max_band}) {
        EXPECT_FALSE(compare_distributions(sample, ref, method, 0.01).passed);
    }
}

TEST(GoodnessOfFit, ChiSquareBinning) {
    Pmf ref;
    ref.support = {1, 2, 3, 4};
    ref.probs = {0.5, 0.3, 0.15, 0.05};
    std::vector<std::int64_t> sample;
    for (int i = 0; i < 10; ++i) sample.push_back(1 + i % 3);
    auto const rep = compare_distributions(sample, ref, GofMethod::chi_square);
    // Expected counts 5, 3, 1.5, 0.5 merge into {5} and {5}.
    EXPECT_EQ(rep.bins, 2);
    EXPECT_EQ(rep.dof, 1);
    std::vector<std::int64_t> below{0, 1, 2};
    auto const bad = compare_distributions(below, ref, GofMethod::chi_square);
    EXPECT_FALSE(bad.passed);
    EXPECT_TRUE(std::isinf(bad.statistic));
    EXPECT_THROW(compare_distributions(std::vector<std::int64_t>{}, ref, GofMethod::ks),
                 ContractViolation);
}

TEST(GoodnessOfFit, KolmogorovThreshold) {
    auto const sample = geometric_sample(0.5, 10000, 3);
    auto const rep = compare_distributions(sample, geometric_pmf(0.5, 60), GofMethod::ks, 0.05);
    EXPECT_NEAR(rep.threshold * 100.0, 1.3580986393225505, 1e-9);
}

TEST(Independence, ContingencyTable) {
    std::vector<std::vector<std::int64_t>> const independent{{100, 200}, {150, 300}, {50, 100}};
    EXPECT_NEAR(chi_square_independence(independent).statistic, 0.0, 1e-12);
    EXPECT_TRUE(chi_square_independence(independent).passed);
    std::vector<std::vector<std::int64_t>> const dependent{{300, 10}, {10, 300}};
    EXPECT_FALSE(chi_square_independence(dependent).passed);
    std::vector<std::vector<std::int64_t>> const with_empty_row{{10, 20}, {0, 0}, {20, 40}};
    EXPECT_EQ(chi_square_independence(with_empty_row).dof, 1);
}

TEST(CdfBands, CountsAndOverlap) {
    std::vector<double> const a{1, 2, 3, 4};
    std::vector<double> const grid{0.5, 2.0, 4.0};
    auto const bands = empirical_cdf_bands(a, grid, 0.95);
    EXPECT_EQ(bands[0].cdf, 0.0);
    EXPECT_EQ(bands[1].cdf, 0.5);
    EXPECT_EQ(bands[2].cdf, 1.0);
    EXPECT_NEAR(bands[1].low, clopper_pearson(2, 4, 0.95).low, 1e-15);
    EXPECT_EQ(cdf_band_overlap(a, a, grid), 1.0);
    std::vector<double> far(1000, 100.0);
    std::vector<double> near(1000, 1.0);
    EXPECT_NEAR(cdf_band_overlap(far, near, std::vector<double>{0.0, 50.0}), 0.5, 1e-15);
}

TEST(EmpiricalQuantile, NearestRank) {
    std::vector<double> const v{5, 1, 4, 2, 3};
    EXPECT_EQ(empirical_quantile(v, 0.0), 1.0);
    EXPECT_EQ(empirical_quantile(v, 0.5), 3.0);
    EXPECT_EQ(empirical_quantile(v, 0.99), 5.0);
    EXPECT_THROW(empirical_quantile(std::vector<double>{}, 0.5), ContractViolation);
}

TEST(Serialization, PmfCsvAndReportJson) {
    Pmf p;
    p.support = {1, 2};
    p.probs = {0.25, 0.75};
    EXPECT_EQ(to_csv(p), "support,prob\n1,0.25\n2,0.75\n");
    TestReport r;
    r.method = "chi-square";
    r.passed = true;
    auto const json = to_json(r);
    EXPECT_NE(json.find("\"method\": \"chi-square\""), std::string::npos);
    EXPECT_NE(json.find("\"passed\": true"), std::string::npos);
}

}  // namespace
}  // namespace parrep
