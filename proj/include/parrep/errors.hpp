// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace parrep {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A precondition of an operation does not hold (bad dimension, bad shape).
class ContractViolation : public Error {
  public:
    using Error::Error;
};

/// The operation needs something the model cannot provide, such as an
/// enumerable transition table.
class UnsupportedModel : public Error {
  public:
    using Error::Error;
};

/// A parameter lies outside the mathematical domain of a formula.
class DomainError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

class SolverFailure : public Error {
  public:
    SolverFailure(std::string const& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

class DephasingAborted : public Error {
  public:
    DephasingAborted(std::string const& what, std::size_t replica,
                     std::uint64_t restarts)
        : Error(what), replica_(replica), restarts_(restarts) {}
    std::size_t replica() const noexcept { return replica_; }
    std::uint64_t restarts() const noexcept { return restarts_; }

  private:
    std::size_t replica_;
    std::uint64_t restarts_;
};

class RunawayParallelStep : public Error {
  public:
    using Error::Error;
};

/// The minorization constant came out outside (0, 1).
class DegenerateBound : public Error {
  public:
    DegenerateBound(std::string const& what, double delta)
        : Error(what), delta_(delta) {}
    double delta() const noexcept { return delta_; }

  private:
    double delta_;
};

}  // namespace parrep
