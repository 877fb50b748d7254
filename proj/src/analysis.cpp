// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "parrep/errors.hpp"

namespace parrep {

double Pmf::mass() const noexcept {
    return std::accumulate(probs.begin(), probs.end(), 0.0);
}

double Pmf::mean() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        m += static_cast<double>(support[i]) * probs[i];
    }
    return m;
}

double Pmf::prob_at(std::int64_t z) const noexcept {
    auto it = std::lower_bound(support.begin(), support.end(), z);
    if (it == support.end() || *it != z) return 0.0;
    return probs[static_cast<std::size_t>(it - support.begin())];
}

namespace {

void check_probability(double p, char const* what) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError(fmt::format("{} = {} must lie in (0, 1)", what, p));
    }
}

}  // namespace

Pmf geometric_pmf(double p, std::int64_t z_max) {
    check_probability(p, "p");
    Pmf out;
    double const log_q = std::log1p(-p);
    for (std::int64_t z = 1; z <= z_max; ++z) {
        out.support.push_back(z);
        out.probs.push_back(p * std::exp(static_cast<double>(z - 1) * log_q));
    }
    out.tail = std::exp(static_cast<double>(std::max<std::int64_t>(z_max, 0)) * log_q);
    return out;
}

Pmf exit_time_pmf_exact(Eigen::MatrixXd const& q, Eigen::VectorXd const& mu,
                        std::int64_t n_max) {
    if (q.rows() != q.cols() || q.rows() != mu.size()) {
        throw ContractViolation("exit_time_pmf_exact: inconsistent dimensions");
    }
    if ((mu.array() < 0.0).any() || std::abs(mu.sum() - 1.0) > 1e-12) {
        throw ContractViolation("mu must be a probability vector on S");
    }
    Eigen::VectorXd const exit_mass =
        Eigen::VectorXd::Ones(q.rows()) - q * Eigen::VectorXd::Ones(q.rows());
    Eigen::RowVectorXd v = mu.transpose();
    Eigen::RowVectorXd next(v.size());
    Pmf out;
    out.support.reserve(static_cast<std::size_t>(std::max<std::int64_t>(n_max, 0)));
    out.probs.reserve(out.support.capacity());
    for (std::int64_t n = 1; n <= n_max; ++n) {
        out.support.push_back(n);
        out.probs.push_back(v.dot(exit_mass.transpose()));
        next.noalias() = v * q;
        v.swap(next);
    }
    out.tail = v.sum();
    return out;
}

//---------------------------------------------------------------------------//

namespace {

using Real = long double;

template <class Visit>
void for_each_triple(std::int64_t n, std::int64_t t_poll, Real p,
                     std::int64_t m_limit, Visit&& visit) {
    Real const q = 1.0L - p;
    for (std::int64_t m = 1; m <= m_limit; ++m) {
        for (std::int64_t k = 1; k <= n; ++k) {
            for (std::int64_t t = 1; t <= t_poll; ++t) {
                Real const earlier = std::pow(q, Real((k - 1) * m * t_poll));
                Real const winner =
                    p * std::pow(q, Real((m - 1) * t_poll + t - 1));
                Real const later = std::pow(q, Real((n - k) * (m - 1) * t_poll));
                visit(m, k, t, earlier * winner * later);
            }
        }
    }
}

void check_lemma_args(std::int64_t n, std::int64_t t_poll, double p) {
    check_probability(p, "p");
    if (n < 1 || t_poll < 1) {
        throw ContractViolation("n_replicas and t_poll must be >= 1");
    }
}

}  // namespace

Pmf lemma1_pmf(std::int64_t n_replicas, std::int64_t t_poll, double p,
               std::int64_t z_max, AcceleratedTimeRule rule) {
    check_lemma_args(n_replicas, t_poll, p);
    if (z_max < 1) throw ContractViolation("z_max must be >= 1");
    std::vector<Real> acc(static_cast<std::size_t>(z_max) + 1, 0.0L);
    // Smallest value reachable in cycle m is N (m-1) t_poll + 1 (corrected)
    // or N ((m-1) t_poll + 1) (legacy); both exceed z_max past this m.
    std::int64_t const m_limit = (z_max - 1) / (n_replicas * t_poll) + 1;
    for_each_triple(n_replicas, t_poll, Real(p), m_limit,
                    [&](std::int64_t m, std::int64_t k, std::int64_t t, Real prob) {
                        std::int64_t const tau = (m - 1) * t_poll + t;
                        std::int64_t const z =
                            rule == AcceleratedTimeRule::corrected
                                ? (n_replicas - 1) * (m - 1) * t_poll +
                                      (k - 1) * t_poll + tau
                                : n_replicas * tau;
                        if (z <= z_max) acc[static_cast<std::size_t>(z)] += prob;
                    });
    Pmf out;
    Real total = 0.0L;
    for (std::int64_t z = 1; z <= z_max; ++z) {
        out.support.push_back(z);
        out.probs.push_back(static_cast<double>(acc[static_cast<std::size_t>(z)]));
        total += acc[static_cast<std::size_t>(z)];
    }
    out.tail = static_cast<double>(std::max(0.0L, 1.0L - total));
    return out;
}

Pmf lemma1_k_marginal(std::int64_t n_replicas, std::int64_t t_poll, double p) {
    check_lemma_args(n_replicas, t_poll, p);
    // Cycle m carries (1-p)^(N (m-1) T) of the mass; stop once it is below
    // long double resolution.
    Real const per_cycle = std::pow(1.0L - Real(p), Real(n_replicas * t_poll));
    std::int64_t m_limit = 1;
    for (Real left = 1.0L; left > 1e-21L && m_limit < 100'000'000; ++m_limit) {
        left *= per_cycle;
    }
    std::vector<Real> acc(static_cast<std::size_t>(n_replicas), 0.0L);
    for_each_triple(n_replicas, t_poll, Real(p), m_limit,
                    [&](std::int64_t, std::int64_t k, std::int64_t, Real prob) {
                        acc[static_cast<std::size_t>(k - 1)] += prob;
                    });
    Pmf out;
    Real total = 0.0L;
    for (std::int64_t k = 1; k <= n_replicas; ++k) {
        out.support.push_back(k);
        out.probs.push_back(static_cast<double>(acc[static_cast<std::size_t>(k - 1)]));
        total += acc[static_cast<std::size_t>(k - 1)];
    }
    out.tail = static_cast<double>(std::max(0.0L, 1.0L - total));
    return out;
}

Pmf k_distribution(std::int64_t n_replicas, double p) {
    check_probability(p, "p");
    if (n_replicas < 1) throw ContractViolation("n_replicas must be >= 1");
    double const log_q = std::log1p(-p);
    double const first_exit =
        -std::expm1(static_cast<double>(n_replicas) * log_q);
    Pmf out;
    for (std::int64_t k = 1; k <= n_replicas; ++k) {
        out.support.push_back(k);
        out.probs.push_back(std::exp(static_cast<double>(k - 1) * log_q) * p /
                            first_exit);
    }
    return out;
}

//---------------------------------------------------------------------------//

bool ErrorReport::within_bounds() const noexcept {
    return absolute >= 0.0 && absolute <= bound_absolute && relative >= 0.0 &&
           relative <= bound_relative && prefactor >= 0.0 && prefactor <= 1.0;
}

double relative_error_prefactor(double r, std::int64_t n_replicas) {
    if (!(r > 0.0 && r < 1.0)) {
        throw DomainError(fmt::format("r = {} must lie in (0, 1)", r));
    }
    if (n_replicas < 1) throw DomainError("N must be >= 1");
    if (n_replicas == 1) return 0.0;
    double const n = static_cast<double>(n_replicas);
    return 1.0 / -std::expm1(n * std::log(r)) - 1.0 / ((1.0 - r) * n);
}

ErrorReport legacy_error(std::int64_t n_replicas, double p, double dt) {
    check_probability(p, "p");
    if (n_replicas < 1) throw DomainError("N must be >= 1");
    if (!(dt > 0.0)) throw DomainError(fmt::format("dt = {} must be > 0", dt));

    double const n = static_cast<double>(n_replicas);
    ErrorReport out;
    out.bound_absolute = n * dt;
    out.bound_relative = p * n;
    out.prefactor = relative_error_prefactor(1.0 - p, n_replicas);
    if (n_replicas == 1) return out;  // K = N always; both errors vanish.
    double const first_exit = -std::expm1(n * std::log1p(-p));
    out.absolute = n * dt / first_exit - dt / p;
    out.relative = p * n / first_exit - 1.0;
    return out;
}

//---------------------------------------------------------------------------//

ConfidenceInterval clopper_pearson(std::int64_t successes, std::int64_t trials,
                                   double confidence) {
    if (successes < 0 || successes > trials) {
        throw ContractViolation("clopper_pearson needs 0 <= successes <= trials");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw DomainError("confidence must lie in (0, 1)");
    }
    double const alpha = 1.0 - confidence;
    auto const x = static_cast<double>(successes);
    auto const n = static_cast<double>(trials);
    ConfidenceInterval ci;
    if (successes > 0) {
        ci.low = boost::math::ibeta_inv(x, n - x + 1.0, alpha / 2.0);
    }
    if (successes < trials) {
        ci.high = boost::math::ibeta_inv(x + 1.0, n - x, 1.0 - alpha / 2.0);
    }
    return ci;
}

//---------------------------------------------------------------------------//

namespace {

double chi_square_quantile(double dof, double prob) {
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof),
                                 prob);
}

double chi_square_sf(double dof, double x) {
    return boost::math::cdf(boost::math::complement(
        boost::math::chi_squared_distribution<double>(dof), x));
}

/// Kolmogorov limiting distribution P(K <= x).
double kolmogorov_cdf(double x) {
    if (x <= 0.0) return 0.0;
    if (x < 1.0) {
        double const pi = 3.14159265358979323846;
        double sum = 0.0;
        for (int k = 1; k <= 20; ++k) {
            double const a = (2.0 * k - 1.0) * pi;
            sum += std::exp(-a * a / (8.0 * x * x));
        }
        return std::sqrt(2.0 * pi) / x * sum;
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double const term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-18) break;
    }
    return 1.0 - 2.0 * sum;
}

double kolmogorov_quantile(double prob) {
    double lo = 0.0, hi = 5.0;
    for (int i = 0; i < 200; ++i) {
        double const mid = 0.5 * (lo + hi);
        (kolmogorov_cdf(mid) < prob ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// sup over integers of |F_n(x) - F(x)|.
double discrete_sup_distance(std::vector<std::int64_t> const& sorted,
                             Pmf const& reference) {
    auto const lo = std::min(sorted.front(), reference.support.front());
    auto const hi = std::max(sorted.back(), reference.support.back());
    double const n = static_cast<double>(sorted.size());
    double ref_cdf = 0.0;
    std::size_t ref_i = 0;
    std::size_t sample_i = 0;
    double worst = 0.0;
    for (auto x = lo; x <= hi; ++x) {
        while (ref_i < reference.support.size() && reference.support[ref_i] <= x) {
            ref_cdf += reference.probs[ref_i++];
        }
        while (sample_i < sorted.size() && sorted[sample_i] <= x) ++sample_i;
        worst = std::max(worst, std::abs(double(sample_i) / n - ref_cdf));
    }
    return worst;
}

}  // namespace

TestReport compare_distributions(std::span<std::int64_t const> sample,
                                 Pmf const& reference, GofMethod method,
                                 double level) {
    if (sample.empty()) throw ContractViolation("empty sample");
    if (reference.support.empty() ||
        reference.support.size() != reference.probs.size()) {
        throw ContractViolation("empty or malformed reference pmf");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw DomainError("test level must lie in (0, 1)");
    }
    std::vector<std::int64_t> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    double const n = static_cast<double>(sorted.size());

    TestReport rep;
    rep.level = level;
    rep.samples = static_cast<std::int64_t>(sorted.size());

    if (method == GofMethod::chi_square) {
        rep.method = "chi-square";
        if (sorted.front() < reference.support.front()) {
            rep.statistic = std::numeric_limits<double>::infinity();
            rep.p_value = 0.0;
            rep.passed = false;
            return rep;
        }
        std::vector<double> expected;
        std::vector<double> observed;
        double exp_acc = 0.0;
        double obs_acc = 0.0;
        std::size_t s = 0;
        for (std::size_t i = 0; i < reference.support.size(); ++i) {
            exp_acc += n * reference.probs[i];
            while (s < sorted.size() && sorted[s] <= reference.support[i]) {
                obs_acc += 1.0;
                ++s;
            }
            if (exp_acc >= 5.0) {
                expected.push_back(exp_acc);
                observed.push_back(obs_acc);
                exp_acc = obs_acc = 0.0;
            }
        }
        exp_acc += n * reference.tail;
        obs_acc += static_cast<double>(sorted.size() - s);
        if (expected.empty() || exp_acc >= 5.0) {
            expected.push_back(exp_acc);
            observed.push_back(obs_acc);
        } else {
            expected.back() += exp_acc;
            observed.back() += obs_acc;
        }
        double stat = 0.0;
        for (std::size_t b = 0; b < expected.size(); ++b) {
            if (expected[b] > 0.0) {
                double const d = observed[b] - expected[b];
                stat += d * d / expected[b];
            } else if (observed[b] > 0.0) {
                stat = std::numeric_limits<double>::infinity();
            }
        }
        rep.bins = static_cast<std::int64_t>(expected.size());
        rep.dof = rep.bins - 1;
        rep.statistic = stat;
        if (rep.dof < 1) {
            rep.threshold = 0.0;
            rep.p_value = 1.0;
            rep.passed = std::isfinite(stat);
            return rep;
        }
        rep.threshold = chi_square_quantile(double(rep.dof), 1.0 - level);
        rep.p_value = std::isfinite(stat) ? chi_square_sf(double(rep.dof), stat) : 0.0;
        rep.passed = stat <= rep.threshold;
        return rep;
    }

    double const d = discrete_sup_distance(sorted, reference);
    rep.statistic = d;
    if (method == GofMethod::ks) {
        rep.method = "ks-discrete";
        rep.threshold = kolmogorov_quantile(1.0 - level) / std::sqrt(n);
        rep.p_value = 1.0 - kolmogorov_cdf(std::sqrt(n) * d);
    } else {
        rep.method = "max-band";
        rep.threshold = std::sqrt(std::log(2.0 / level) / (2.0 * n));
        rep.p_value = std::min(1.0, 2.0 * std::exp(-2.0 * n * d * d));
    }
    rep.passed = d <= rep.threshold;
    return rep;
}

TestReport chi_square_independence(
    std::vector<std::vector<std::int64_t>> const& table, double level) {
    if (table.empty() || table.front().empty()) {
        throw ContractViolation("empty contingency table");
    }
    auto const cols = table.front().size();
    std::vector<double> row_sum;
    std::vector<double> col_sum(cols, 0.0);
    double total = 0.0;
    for (auto const& row : table) {
        if (row.size() != cols) throw ContractViolation("ragged contingency table");
        double rs = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            rs += double(row[c]);
            col_sum[c] += double(row[c]);
        }
        row_sum.push_back(rs);
        total += rs;
    }
    if (total <= 0.0) throw ContractViolation("empty contingency table");
    std::int64_t live_rows = 0, live_cols = 0;
    for (double r : row_sum) live_rows += r > 0.0;
    for (double c : col_sum) live_cols += c > 0.0;

    double stat = 0.0;
    for (std::size_t r = 0; r < table.size(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double const e = row_sum[r] * col_sum[c] / total;
            if (e > 0.0) {
                double const d = double(table[r][c]) - e;
                stat += d * d / e;
            }
        }
    }
    TestReport rep;
    rep.method = "chi-square-independence";
    rep.level = level;
    rep.samples = static_cast<std::int64_t>(total);
    rep.bins = live_rows * live_cols;
    rep.dof = (live_rows - 1) * (live_cols - 1);
    rep.statistic = stat;
    if (rep.dof < 1) {
        rep.passed = true;
        return rep;
    }
    rep.threshold = chi_square_quantile(double(rep.dof), 1.0 - level);
    rep.p_value = chi_square_sf(double(rep.dof), stat);
    rep.passed = stat <= rep.threshold;
    return rep;
}

//---------------------------------------------------------------------------//

std::vector<CdfBandPoint> empirical_cdf_bands(std::span<double const> sample,
                                              std::span<double const> grid,
                                              double confidence) {
    if (sample.empty()) throw ContractViolation("empty sample");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    auto const n = static_cast<std::int64_t>(sorted.size());
    std::vector<CdfBandPoint> out;
    out.reserve(grid.size());
    for (double t : grid) {
        auto const hits = static_cast<std::int64_t>(
            std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
        auto const ci = clopper_pearson(hits, n, confidence);
        out.push_back({t, double(hits) / double(n), ci.low, ci.high});
    }
    return out;
}

double cdf_band_overlap(std::span<double const> a, std::span<double const> b,
                        std::span<double const> grid, double confidence) {
    if (grid.empty()) throw ContractViolation("empty evaluation grid");
    auto const ba = empirical_cdf_bands(a, grid, confidence);
    auto const bb = empirical_cdf_bands(b, grid, confidence);
    std::size_t overlapping = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::max(ba[i].low, bb[i].low) <= std::min(ba[i].high, bb[i].high)) {
            ++overlapping;
        }
    }
    return double(overlapping) / double(grid.size());
}

double empirical_quantile(std::span<double const> sample, double q) {
    if (sample.empty()) throw ContractViolation("empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile must be in [0, 1]");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * double(sorted.size())));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

std::string to_csv(Pmf const& pmf) {
    std::string out = "support,prob\n";
    for (std::size_t i = 0; i < pmf.support.size(); ++i) {
        out += fmt::format("{},{:.17g}\n", pmf.support[i], pmf.probs[i]);
    }
    return out;
}

std::string to_json(TestReport const& report) {
    nlohmann::ordered_json doc;
    doc["method"] = report.method;
    doc["statistic"] = report.statistic;
    doc["threshold"] = report.threshold;
    doc["level"] = report.level;
    doc["p_value"] = report.p_value;
    doc["dof"] = report.dof;
    doc["samples"] = report.samples;
    doc["bins"] = report.bins;
    doc["passed"] = report.passed;
    return doc.dump(2);
}

}  // namespace parrep
