// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace parrep {

/// Probability mass function on an increasing integer support, possibly
/// truncated; `tail` is the mass beyond the last support point.
struct Pmf {
    std::vector<std::int64_t> support;
    std::vector<double> probs;
    double tail = 0.0;

    double mass() const noexcept;
    double mean() const noexcept;
    /// Zero outside the support.
    double prob_at(std::int64_t z) const noexcept;
    bool covers(double tail_tol) const noexcept { return tail <= tail_tol; }
};

/// P(tau = z) = p (1 - p)^(z - 1) for z = 1..z_max.
Pmf geometric_pmf(double p, std::int64_t z_max);

/// P(tau = n) = mu^T Q^(n-1) (1 - Q 1) for n = 1..n_max by repeated
/// vector-matrix products; tail = mu^T Q^n_max 1.
Pmf exit_time_pmf_exact(Eigen::MatrixXd const& q, Eigen::VectorXd const& mu,
                        std::int64_t n_max);

//---------------------------------------------------------------------------//

enum class AcceleratedTimeRule {
    corrected,  ///< (N - 1)(M - 1) T_poll + (K - 1) T_poll + tau_K
    legacy,     ///< N tau_K
};

/// Law of the accelerated time built from N i.i.d. Geometric(p) exit times,
/// accumulated in long double over every (m, k, t) triple with
///   P = (1-p)^((k-1) m T) * p (1-p)^((m-1) T + t - 1) * (1-p)^((N-k)(m-1) T).
/// With the corrected rule this is Geometric(p); the legacy rule is the
/// negative control.
Pmf lemma1_pmf(std::int64_t n_replicas, std::int64_t t_poll, double p,
               std::int64_t z_max,
               AcceleratedTimeRule rule = AcceleratedTimeRule::corrected);

/// Marginal law of the winning replica index K from the same summation.
Pmf lemma1_k_marginal(std::int64_t n_replicas, std::int64_t t_poll, double p);

/// P(K = k) = (1-p)^(k-1) p / (1 - (1-p)^N), k = 1..N.
Pmf k_distribution(std::int64_t n_replicas, double p);

//---------------------------------------------------------------------------//

/// Error of the continuous-time rule N tau_K dt against the corrected
/// accelerated time, for T_poll = 1.
struct ErrorReport {
    double absolute = 0.0;
    double relative = 0.0;
    double bound_absolute = 0.0;  ///< N dt
    double bound_relative = 0.0;  ///< p N
    double prefactor = 0.0;       ///< f(1 - p, N)

    bool within_bounds() const noexcept;
};

/// absolute = N dt / (1 - (1-p)^N) - dt / p,
/// relative = p N / (1 - (1-p)^N) - 1. Throws DomainError unless p is in
/// (0, 1), N >= 1 and dt > 0.
ErrorReport legacy_error(std::int64_t n_replicas, double p, double dt);

/// f(r, N) = 1 / (1 - r^N) - 1 / ((1 - r) N), so absolute = N dt f(1 - p, N)
/// and relative = p N f(1 - p, N).
double relative_error_prefactor(double r, std::int64_t n_replicas);

//---------------------------------------------------------------------------//

struct ConfidenceInterval {
    double low = 0.0;
    double high = 1.0;
};

/// Exact binomial interval from Beta quantiles; low = 0 when successes = 0
/// and high = 1 when successes = trials.
ConfidenceInterval clopper_pearson(std::int64_t successes, std::int64_t trials,
                                   double confidence);

//---------------------------------------------------------------------------//

enum class GofMethod { chi_square, ks, max_band };

struct TestReport {
    std::string method;
    double statistic = 0.0;
    double threshold = 0.0;
    double level = 0.0;
    double p_value = 1.0;
    std::int64_t dof = 0;
    std::int64_t samples = 0;
    std::int64_t bins = 0;
    bool passed = false;
};

/// Goodness of fit of an integer sample against a reference pmf.
///
/// chi_square: consecutive support points are merged until each bin expects
/// at least 5 counts; the truncated tail joins the last bin. A sample value
/// below the support fails the test outright.
/// ks: discrete KS statistic against continuous Kolmogorov quantiles, which is
/// conservative on integer data.
/// max_band: sup |F_n - F| against the DKW band at `level`.
/// Throws ContractViolation on an empty sample or empty reference.
TestReport compare_distributions(std::span<std::int64_t const> sample,
                                 Pmf const& reference, GofMethod method,
                                 double level = 0.01);

/// Pearson chi-square test of independence on a contingency table of counts.
TestReport chi_square_independence(
    std::vector<std::vector<std::int64_t>> const& table, double level = 0.01);

struct CdfBandPoint {
    double t = 0.0;
    double cdf = 0.0;
    double low = 0.0;
    double high = 0.0;
};

/// Empirical CDF of `sample` at each grid point with Clopper-Pearson bands.
std::vector<CdfBandPoint> empirical_cdf_bands(std::span<double const> sample,
                                              std::span<double const> grid,
                                              double confidence = 0.95);

/// Fraction of grid points where the two samples' CDF bands intersect.
double cdf_band_overlap(std::span<double const> a, std::span<double const> b,
                        std::span<double const> grid, double confidence = 0.95);

/// Empirical quantile (nearest rank) of an unsorted sample.
double empirical_quantile(std::span<double const> sample, double q);

/// "support,prob" rows with a header line.
std::string to_csv(Pmf const& pmf);
std::string to_json(TestReport const& report);

}  // namespace parrep
