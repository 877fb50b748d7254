// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/chain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "parrep/errors.hpp"

namespace parrep {

SpaceKind space_of(ChainPoint const& x) noexcept {
    return std::holds_alternative<LatticePoint>(x) ? SpaceKind::lattice
                                                   : SpaceKind::real;
}

std::size_t dimension_of(ChainPoint const& x) noexcept {
    if (auto const* r = std::get_if<RealPoint>(&x)) {
        return r->coords.size();
    }
    return 1;
}

std::string to_string(ChainPoint const& x) {
    if (auto const* l = std::get_if<LatticePoint>(&x)) {
        return std::to_string(l->site);
    }
    std::string out;
    for (double c : std::get<RealPoint>(x).coords) {
        if (!out.empty()) out += ',';
        out += fmt::format("{:.17g}", c);
    }
    return out;
}

//---------------------------------------------------------------------------//

std::vector<Transition> ChainModel::transitions(std::int64_t) const {
    throw UnsupportedModel(fmt::format(
        "model '{}' has no enumerable transition table", name()));
}

void ChainModel::check_point(ChainPoint const& x) const {
    if (space_of(x) != space() || dimension_of(x) != dimension()) {
        throw ContractViolation(fmt::format(
            "point '{}' does not belong to the {}-dimensional space of model "
            "'{}'",
            to_string(x), dimension(), name()));
    }
}

ChainPoint step(ChainModel const& model, ChainPoint const& x, RngStream& rng) {
    model.check_point(x);
    ChainPoint next = x;
    model.advance(next, rng);
    return next;
}

//---------------------------------------------------------------------------//

LatticeKernelModel::LatticeKernelModel(std::string name, Kernel kernel)
    : name_(std::move(name)), kernel_(std::move(kernel)) {}

std::vector<Transition> LatticeKernelModel::transitions(
    std::int64_t site) const {
    return kernel_(site);
}

void LatticeKernelModel::advance(ChainPoint& x, RngStream& rng) const {
    auto* l = std::get_if<LatticePoint>(&x);
    if (!l) check_point(x);
    double const u = rng.uniform();
    auto const table = kernel_(l->site);
    if (table.empty()) {
        throw ContractViolation(
            fmt::format("empty transition table at site {}", l->site));
    }
    double cumulative = 0.0;
    for (auto const& t : table) {
        cumulative += t.probability;
        if (u < cumulative) {
            l->site = t.target;
            return;
        }
    }
    // u fell in the rounding gap above the last threshold.
    l->site = table.back().target;
}

//---------------------------------------------------------------------------//

std::int64_t RandomWalkModel::next_site(std::int64_t site, double u) noexcept {
    if (site == 0) {
        if (u < 1.0 / 3.0) return -1;
        if (u < 2.0 / 3.0) return 0;
        return 1;
    }
    double const down = site < 0 ? 0.25 : 0.75;
    return u < down ? site - 1 : site + 1;
}

void RandomWalkModel::advance(ChainPoint& x, RngStream& rng) const {
    auto* l = std::get_if<LatticePoint>(&x);
    if (!l) check_point(x);
    l->site = next_site(l->site, rng.uniform());
}

std::vector<Transition> RandomWalkModel::transitions(std::int64_t site) const {
    if (site == 0) {
        return {{-1, 1.0 / 3.0}, {0, 1.0 / 3.0}, {1, 1.0 / 3.0}};
    }
    if (site < 0) {
        return {{site - 1, 0.25}, {site + 1, 0.75}};
    }
    return {{site - 1, 0.75}, {site + 1, 0.25}};
}

//---------------------------------------------------------------------------//

GradientField flat_gradient() {
    return [](std::span<double const>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
}

GradientField sine_well_gradient(double amplitude) {
    return [amplitude](std::span<double const> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            out[i] = amplitude * std::sin(std::numbers::pi * x[i]);
        }
    };
}

GradientField harmonic_gradient(double stiffness) {
    return [stiffness](std::span<double const> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            out[i] = stiffness * x[i];
        }
    };
}

EulerMaruyamaModel::EulerMaruyamaModel(std::size_t dimension,
                                       GradientField grad_v, double beta,
                                       double dt, std::string name)
    : dimension_(dimension),
      grad_v_(std::move(grad_v)),
      beta_(beta),
      dt_(dt),
      noise_scale_(std::sqrt(2.0 * dt / beta)),
      name_(std::move(name)) {
    if (dimension_ == 0) throw ContractViolation("dimension must be >= 1");
    if (!(beta_ > 0.0)) throw ContractViolation("beta must be positive");
    if (!(dt_ > 0.0)) throw ContractViolation("dt must be positive");
    if (!grad_v_) throw ContractViolation("gradient field is empty");
}

void EulerMaruyamaModel::advance_with_noise(std::span<double> x,
                                            std::span<double const> xi) const {
    constexpr std::size_t kInline = 8;
    std::array<double, kInline> small{};
    std::vector<double> large;
    std::span<double> grad;
    if (dimension_ <= kInline) {
        grad = std::span<double>(small.data(), dimension_);
    } else {
        large.resize(dimension_);
        grad = large;
    }
    grad_v_(x, grad);
    for (std::size_t i = 0; i < dimension_; ++i) {
        x[i] = x[i] - grad[i] * dt_ + noise_scale_ * xi[i];
    }
}

void EulerMaruyamaModel::advance(ChainPoint& x, RngStream& rng) const {
    auto* r = std::get_if<RealPoint>(&x);
    if (!r || r->coords.size() != dimension_) check_point(x);
    if (dimension_ == 1) {
        double grad = 0.0;
        grad_v_(std::span<double const>(r->coords.data(), 1),
                std::span<double>(&grad, 1));
        r->coords[0] += -grad * dt_ + noise_scale_ * rng.normal();
        return;
    }
    std::vector<double> xi(dimension_);
    for (auto& v : xi) v = rng.normal();
    advance_with_noise(r->coords, xi);
}

//---------------------------------------------------------------------------//

State State::lattice(StateLabel label, std::int64_t lo, std::int64_t hi) {
    if (label < 0) throw ContractViolation("state labels must be >= 0");
    if (lo > hi) {
        throw ContractViolation(
            fmt::format("empty lattice state [{}, {}]", lo, hi));
    }
    State s;
    s.label_ = label;
    s.space_ = SpaceKind::lattice;
    s.lo_ = lo;
    s.hi_ = hi;
    return s;
}

State State::box(StateLabel label, std::vector<Interval> box) {
    if (label < 0) throw ContractViolation("state labels must be >= 0");
    if (box.empty()) throw ContractViolation("box state needs >= 1 interval");
    for (auto const& iv : box) {
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo < iv.hi)) {
            throw ContractViolation(fmt::format(
                "box interval ({}, {}) must be finite and non-empty", iv.lo,
                iv.hi));
        }
    }
    State s;
    s.label_ = label;
    s.space_ = SpaceKind::real;
    s.box_ = std::move(box);
    return s;
}

bool State::contains(ChainPoint const& x) const noexcept {
    if (auto const* l = std::get_if<LatticePoint>(&x)) {
        return space_ == SpaceKind::lattice && l->site >= lo_ &&
               l->site <= hi_;
    }
    auto const& c = std::get<RealPoint>(x).coords;
    if (space_ != SpaceKind::real || c.size() != box_.size()) return false;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!(c[i] > box_[i].lo && c[i] < box_[i].hi)) return false;
    }
    return true;
}

std::size_t State::size() const noexcept {
    return space_ == SpaceKind::lattice ? static_cast<std::size_t>(hi_ - lo_ + 1)
                                        : 0;
}

std::vector<std::int64_t> State::points() const {
    if (space_ != SpaceKind::lattice) {
        throw UnsupportedModel(fmt::format(
            "state {} is continuous and has no point list", label_));
    }
    std::vector<std::int64_t> pts;
    pts.reserve(size());
    for (auto i = lo_; i <= hi_; ++i) pts.push_back(i);
    return pts;
}

std::optional<std::size_t> State::index_of(std::int64_t site) const noexcept {
    if (space_ != SpaceKind::lattice || site < lo_ || site > hi_) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(site - lo_);
}

//---------------------------------------------------------------------------//

namespace {

bool overlap(State const& a, State const& b) {
    if (a.space() != b.space()) return false;
    if (a.space() == SpaceKind::lattice) {
        return a.lo() <= b.hi() && b.lo() <= a.hi();
    }
    auto ai = a.intervals();
    auto bi = b.intervals();
    if (ai.size() != bi.size()) return false;
    for (std::size_t i = 0; i < ai.size(); ++i) {
        if (!(ai[i].lo < bi[i].hi && bi[i].lo < ai[i].hi)) return false;
    }
    return true;
}

}  // namespace

StatePartition::StatePartition(std::vector<State> states)
    : states_(std::move(states)) {
    for (std::size_t i = 0; i < states_.size(); ++i) {
        for (std::size_t j = i + 1; j < states_.size(); ++j) {
            if (states_[i].label() == states_[j].label()) {
                throw ContractViolation(fmt::format(
                    "duplicate state label {}", states_[i].label()));
            }
            if (overlap(states_[i], states_[j])) {
                throw ContractViolation(
                    fmt::format("states {} and {} overlap", states_[i].label(),
                                states_[j].label()));
            }
        }
    }
}

std::optional<StateLabel> StatePartition::state_of(
    ChainPoint const& x) const noexcept {
    for (auto const& s : states_) {
        if (s.contains(x)) return s.label();
    }
    return std::nullopt;
}

State const& StatePartition::state(StateLabel label) const {
    for (auto const& s : states_) {
        if (s.label() == label) return s;
    }
    throw ContractViolation(fmt::format("no state with label {}", label));
}

//---------------------------------------------------------------------------//

namespace {

void require_lattice(ChainModel const& model, State const& state) {
    if (model.space() != SpaceKind::lattice ||
        state.space() != SpaceKind::lattice) {
        throw UnsupportedModel(fmt::format(
            "state {} of model '{}' is not a finite lattice state",
            state.label(), model.name()));
    }
}

}  // namespace

Eigen::MatrixXd substochastic_matrix(ChainModel const& model,
                                     State const& state) {
    require_lattice(model, state);
    auto const n = static_cast<Eigen::Index>(state.size());
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (auto site = state.lo(); site <= state.hi(); ++site) {
        auto const row = static_cast<Eigen::Index>(*state.index_of(site));
        for (auto const& t : model.transitions(site)) {
            if (auto col = state.index_of(t.target)) {
                q(row, static_cast<Eigen::Index>(*col)) += t.probability;
            }
        }
    }
    return q;
}

ExitMap exit_map(ChainModel const& model, State const& state) {
    require_lattice(model, state);
    std::map<std::int64_t, std::vector<std::pair<std::size_t, double>>> hits;
    for (auto site = state.lo(); site <= state.hi(); ++site) {
        for (auto const& t : model.transitions(site)) {
            if (!state.index_of(t.target)) {
                hits[t.target].emplace_back(*state.index_of(site),
                                            t.probability);
            }
        }
    }
    ExitMap out;
    out.probs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(state.size()),
                                      static_cast<Eigen::Index>(hits.size()));
    Eigen::Index col = 0;
    for (auto const& [target, entries] : hits) {
        out.exterior.push_back(target);
        for (auto const& [row, prob] : entries) {
            out.probs(static_cast<Eigen::Index>(row), col) += prob;
        }
        ++col;
    }
    return out;
}

}  // namespace parrep
