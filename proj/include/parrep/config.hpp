// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "parrep/chain.hpp"

namespace parrep {

/// Flat key/value configuration.
///
/// Text form is one `key = value` per line with `#` comments. A document
/// whose first non-blank character is `{` is read as a flat JSON object
/// instead; arrays become comma-separated values. Every key must be read by
/// some consumer: require_all_consumed() rejects leftovers so that typos are
/// errors rather than silently ignored settings.
class KeyValueConfig {
  public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::string_view text,
                                std::string source = "<string>");
    static KeyValueConfig from_file(std::filesystem::path const& path);

    bool has(std::string const& key) const;
    void set(std::string const& key, std::string value);

    std::string get_string(std::string const& key) const;
    std::string get_string(std::string const& key,
                           std::string const& fallback) const;
    std::int64_t get_int(std::string const& key) const;
    std::int64_t get_int(std::string const& key, std::int64_t fallback) const;
    std::uint64_t get_u64(std::string const& key) const;
    std::uint64_t get_u64(std::string const& key, std::uint64_t fallback) const;
    double get_double(std::string const& key) const;
    double get_double(std::string const& key, double fallback) const;
    bool get_bool(std::string const& key, bool fallback) const;
    std::vector<std::int64_t> get_int_list(std::string const& key) const;
    std::vector<std::int64_t> get_int_list(
        std::string const& key, std::vector<std::int64_t> fallback) const;
    std::vector<double> get_double_list(std::string const& key) const;
    std::vector<double> get_double_list(std::string const& key,
                                        std::vector<double> fallback) const;

    /// Keys starting with `prefix`, in lexicographic order.
    std::vector<std::string> keys_with_prefix(std::string const& prefix) const;

    /// Throws ConfigError naming every key no getter has touched.
    void require_all_consumed() const;

    std::map<std::string, std::string> const& entries() const noexcept {
        return entries_;
    }
    std::string const& source() const noexcept { return source_; }

  private:
    std::string const& raw(std::string const& key) const;

    std::map<std::string, std::string> entries_;
    mutable std::set<std::string> consumed_;
    std::string source_ = "<string>";
};

/// Model schema:
///   model      = random-walk | euler-maruyama
///   dimension  = d                       (euler-maruyama, default 1)
///   potential  = sine-well | flat | harmonic   (default sine-well)
///   amplitude  = a   (sine-well, grad V_i = a sin(pi x_i), default 2 pi)
///   stiffness  = k   (harmonic, grad V = k x, default 1)
///   beta, dt   = inverse temperature and time step (default 1, 0.01)
std::unique_ptr<ChainModel> build_model(KeyValueConfig const& config);

/// Partition schema: one `state.<label> = ...` key per state.
///   lattice models:    state.0 = -5:5        inclusive integer range
///   continuous models: state.0 = -1:1,-1:1   open interval per coordinate
StatePartition build_partition(KeyValueConfig const& config,
                               ChainModel const& model);

/// "3" on the lattice, "0.5" or "0.5,0.25" in R^d.
ChainPoint parse_point(std::string_view text, ChainModel const& model);

}  // namespace parrep
