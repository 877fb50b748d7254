// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "parrep/rng.hpp"

namespace parrep {

//---------------------------------------------------------------------------//
// Points
//---------------------------------------------------------------------------//

struct LatticePoint {
    std::int64_t site = 0;
    friend bool operator==(LatticePoint, LatticePoint) = default;
};

struct RealPoint {
    std::vector<double> coords;
    friend bool operator==(RealPoint const&, RealPoint const&) = default;
};

using ChainPoint = std::variant<LatticePoint, RealPoint>;

inline ChainPoint lattice_point(std::int64_t site) {
    return LatticePoint{site};
}
inline ChainPoint real_point(std::vector<double> coords) {
    return RealPoint{std::move(coords)};
}

enum class SpaceKind { lattice, real };

SpaceKind space_of(ChainPoint const& x) noexcept;
std::size_t dimension_of(ChainPoint const& x) noexcept;

/// Plain text form: "7" for lattice points, "0.5" or "0.5,-0.25" for reals.
std::string to_string(ChainPoint const& x);

//---------------------------------------------------------------------------//
// Models
//---------------------------------------------------------------------------//

struct Transition {
    std::int64_t target;
    double probability;
};

/// A time-homogeneous Markov transition rule.
///
/// Implementations are immutable after construction and draw randomness only
/// from the stream passed to advance(). Every step consumes exactly
/// draws_per_step() draws.
class ChainModel {
  public:
    virtual ~ChainModel() = default;

    virtual std::string_view name() const noexcept = 0;
    virtual SpaceKind space() const noexcept = 0;
    virtual std::size_t dimension() const noexcept = 0;
    virtual std::size_t draws_per_step() const noexcept = 0;

    /// Replaces x with one sample of X_{n+1} given X_n = x.
    virtual void advance(ChainPoint& x, RngStream& rng) const = 0;

    /// One-step law from a lattice site, listing only positive entries.
    /// Throws UnsupportedModel for continuous-space models.
    virtual std::vector<Transition> transitions(std::int64_t site) const;

    /// Throws ContractViolation if x is not a point of this model's space.
    void check_point(ChainPoint const& x) const;
};

ChainPoint step(ChainModel const& model, ChainPoint const& x, RngStream& rng);

/// A lattice chain given by an arbitrary transition table, sampled by
/// cumulative thresholds against one uniform draw per step.
class LatticeKernelModel : public ChainModel {
  public:
    using Kernel = std::function<std::vector<Transition>(std::int64_t)>;

    LatticeKernelModel(std::string name, Kernel kernel);

    std::string_view name() const noexcept override { return name_; }
    SpaceKind space() const noexcept override { return SpaceKind::lattice; }
    std::size_t dimension() const noexcept override { return 1; }
    std::size_t draws_per_step() const noexcept override { return 1; }
    void advance(ChainPoint& x, RngStream& rng) const override;
    std::vector<Transition> transitions(std::int64_t site) const override;

  private:
    std::string name_;
    Kernel kernel_;
};

/// The biased walk on Z that pulls toward the origin.
///
/// From i < 0: up with 3/4, down with 1/4. From i > 0: up with 1/4, down
/// with 3/4. From 0: -1, 0, +1 with 1/3 each. One uniform u per step; at 0 the
/// thresholds are (left, stay, right), elsewhere (down, up).
class RandomWalkModel : public ChainModel {
  public:
    std::string_view name() const noexcept override { return "random-walk"; }
    SpaceKind space() const noexcept override { return SpaceKind::lattice; }
    std::size_t dimension() const noexcept override { return 1; }
    std::size_t draws_per_step() const noexcept override { return 1; }
    void advance(ChainPoint& x, RngStream& rng) const override;
    std::vector<Transition> transitions(std::int64_t site) const override;

    static std::int64_t next_site(std::int64_t site, double u) noexcept;
};

/// Gradient of the potential, written into `out` (same length as `x`).
using GradientField =
    std::function<void(std::span<double const> x, std::span<double> out)>;

GradientField flat_gradient();
/// grad V(x)_i = amplitude * sin(pi x_i); amplitude 2 pi gives the standard
/// double-barrier test potential on (-1, 1).
GradientField sine_well_gradient(double amplitude);
GradientField harmonic_gradient(double stiffness);

/// Euler-Maruyama discretization of overdamped Langevin dynamics:
/// X_{n+1} = X_n - grad V(X_n) dt + sqrt(2 dt / beta) xi_n.
/// Each step draws d standard normals, i.e. 2d stream words.
class EulerMaruyamaModel : public ChainModel {
  public:
    EulerMaruyamaModel(std::size_t dimension, GradientField grad_v,
                       double beta, double dt, std::string name = "euler-maruyama");

    std::string_view name() const noexcept override { return name_; }
    SpaceKind space() const noexcept override { return SpaceKind::real; }
    std::size_t dimension() const noexcept override { return dimension_; }
    std::size_t draws_per_step() const noexcept override {
        return 2 * dimension_;
    }
    void advance(ChainPoint& x, RngStream& rng) const override;

    /// Same update with an explicit noise vector; used to pin the formula.
    void advance_with_noise(std::span<double> x,
                            std::span<double const> xi) const;

    GradientField const& gradient() const noexcept { return grad_v_; }
    double beta() const noexcept { return beta_; }
    double dt() const noexcept { return dt_; }

  private:
    std::size_t dimension_;
    GradientField grad_v_;
    double beta_;
    double dt_;
    double noise_scale_;
    std::string name_;
};

//---------------------------------------------------------------------------//
// States
//---------------------------------------------------------------------------//

using StateLabel = int;

struct Interval {
    double lo;
    double hi;
};

/// One metastable set: either an inclusive integer range on the lattice or a
/// product of open intervals in R^d.
class State {
  public:
    static State lattice(StateLabel label, std::int64_t lo, std::int64_t hi);
    static State box(StateLabel label, std::vector<Interval> box);

    StateLabel label() const noexcept { return label_; }
    SpaceKind space() const noexcept { return space_; }
    bool contains(ChainPoint const& x) const noexcept;

    /// Lattice states only.
    std::int64_t lo() const noexcept { return lo_; }
    std::int64_t hi() const noexcept { return hi_; }
    std::size_t size() const noexcept;
    std::vector<std::int64_t> points() const;
    std::optional<std::size_t> index_of(std::int64_t site) const noexcept;

    /// Continuous states only.
    std::span<Interval const> intervals() const noexcept { return box_; }

  private:
    State() = default;

    StateLabel label_ = 0;
    SpaceKind space_ = SpaceKind::lattice;
    std::int64_t lo_ = 0;
    std::int64_t hi_ = -1;
    std::vector<Interval> box_;
};

/// The collection of disjoint bounded states and the quotient map onto their
/// labels. Labels are non-negative and unique.
class StatePartition {
  public:
    explicit StatePartition(std::vector<State> states);

    std::optional<StateLabel> state_of(ChainPoint const& x) const noexcept;
    State const& state(StateLabel label) const;
    std::span<State const> states() const noexcept { return states_; }

  private:
    std::vector<State> states_;
};

inline std::optional<StateLabel> state_of(StatePartition const& partition,
                                          ChainPoint const& x) noexcept {
    return partition.state_of(x);
}

/// Q[i][j] = one-step probability from the i-th to the j-th point of a
/// lattice state, points in increasing order.
Eigen::MatrixXd substochastic_matrix(ChainModel const& model,
                                     State const& state);

/// One-step probabilities from each point of a lattice state to each
/// exterior site reachable in one step.
struct ExitMap {
    std::vector<std::int64_t> exterior;
    Eigen::MatrixXd probs;
};

ExitMap exit_map(ChainModel const& model, State const& state);

}  // namespace parrep
