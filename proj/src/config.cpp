// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/config.hpp"

#include <charconv>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "parrep/errors.hpp"

namespace parrep {
namespace {

std::string_view trim(std::string_view s) {
    auto const first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    auto const last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        auto const pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

template <class T>
T parse_number(std::string_view text, std::string_view what) {
    T value{};
    auto const t = trim(text);
    auto const* begin = t.data();
    auto const* end = t.data() + t.size();
    if (!t.empty() && t.front() == '+') ++begin;
    auto const [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || t.empty()) {
        throw ConfigError(fmt::format("cannot parse '{}' as {}", text, what));
    }
    return value;
}

std::string json_scalar(nlohmann::json const& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_float()) return fmt::format("{:.17g}", v.get<double>());
    throw ConfigError("unsupported JSON value: " + v.dump());
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text,
                                     std::string source) {
    KeyValueConfig cfg;
    cfg.source_ = std::move(source);
    auto const body = trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(body);
        } catch (nlohmann::json::exception const& e) {
            throw ConfigError(
                fmt::format("{}: invalid JSON: {}", cfg.source_, e.what()));
        }
        if (!doc.is_object()) {
            throw ConfigError(cfg.source_ + ": JSON spec must be an object");
        }
        for (auto const& [key, value] : doc.items()) {
            std::string joined;
            if (value.is_array()) {
                for (auto const& item : value) {
                    if (!joined.empty()) joined += ',';
                    joined += json_scalar(item);
                }
            } else {
                joined = json_scalar(value);
            }
            cfg.entries_[key] = joined;
        }
        return cfg;
    }

    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = trim(line.substr(0, hash));
        }
        if (line.empty()) continue;
        auto const eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(fmt::format("{}:{}: expected 'key = value'",
                                          cfg.source_, line_no));
        }
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError(
                fmt::format("{}:{}: empty key", cfg.source_, line_no));
        }
        if (!cfg.entries_.emplace(key, value).second) {
            throw ConfigError(fmt::format("{}:{}: duplicate key '{}'",
                                          cfg.source_, line_no, key));
        }
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::from_file(std::filesystem::path const& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot open '{}'", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

bool KeyValueConfig::has(std::string const& key) const {
    return entries_.contains(key);
}

void KeyValueConfig::set(std::string const& key, std::string value) {
    entries_[key] = std::move(value);
}

std::string const& KeyValueConfig::raw(std::string const& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw ConfigError(
            fmt::format("{}: missing required key '{}'", source_, key));
    }
    consumed_.insert(key);
    return it->second;
}

std::string KeyValueConfig::get_string(std::string const& key) const {
    return raw(key);
}

std::string KeyValueConfig::get_string(std::string const& key,
                                       std::string const& fallback) const {
    return has(key) ? raw(key) : fallback;
}

std::int64_t KeyValueConfig::get_int(std::string const& key) const {
    return parse_number<std::int64_t>(raw(key), "integer '" + key + "'");
}

std::int64_t KeyValueConfig::get_int(std::string const& key,
                                     std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t KeyValueConfig::get_u64(std::string const& key) const {
    return parse_number<std::uint64_t>(raw(key), "u64 '" + key + "'");
}

std::uint64_t KeyValueConfig::get_u64(std::string const& key,
                                      std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

double KeyValueConfig::get_double(std::string const& key) const {
    return parse_number<double>(raw(key), "real '" + key + "'");
}

double KeyValueConfig::get_double(std::string const& key,
                                  double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

bool KeyValueConfig::get_bool(std::string const& key, bool fallback) const {
    if (!has(key)) return fallback;
    auto const& v = raw(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(fmt::format("cannot parse '{}' as boolean '{}'", v, key));
}

std::vector<std::int64_t> KeyValueConfig::get_int_list(
    std::string const& key) const {
    std::vector<std::int64_t> out;
    for (auto part : split(raw(key), ',')) {
        out.push_back(parse_number<std::int64_t>(part, "integer in '" + key + "'"));
    }
    return out;
}

std::vector<std::int64_t> KeyValueConfig::get_int_list(
    std::string const& key, std::vector<std::int64_t> fallback) const {
    return has(key) ? get_int_list(key) : fallback;
}

std::vector<double> KeyValueConfig::get_double_list(
    std::string const& key) const {
    std::vector<double> out;
    for (auto part : split(raw(key), ',')) {
        out.push_back(parse_number<double>(part, "real in '" + key + "'"));
    }
    return out;
}

std::vector<double> KeyValueConfig::get_double_list(
    std::string const& key, std::vector<double> fallback) const {
    return has(key) ? get_double_list(key) : fallback;
}

std::vector<std::string> KeyValueConfig::keys_with_prefix(
    std::string const& prefix) const {
    std::vector<std::string> keys;
    for (auto const& [key, value] : entries_) {
        if (key.starts_with(prefix)) keys.push_back(key);
    }
    return keys;
}

void KeyValueConfig::require_all_consumed() const {
    std::string unknown;
    for (auto const& [key, value] : entries_) {
        if (!consumed_.contains(key)) {
            if (!unknown.empty()) unknown += ", ";
            unknown += key;
        }
    }
    if (!unknown.empty()) {
        throw ConfigError(fmt::format("{}: unknown keys: {}", source_, unknown));
    }
}

//---------------------------------------------------------------------------//

std::unique_ptr<ChainModel> build_model(KeyValueConfig const& config) {
    auto const kind = config.get_string("model");
    if (kind == "random-walk") {
        return std::make_unique<RandomWalkModel>();
    }
    if (kind == "euler-maruyama") {
        auto const dim = config.get_int("dimension", 1);
        if (dim < 1) throw ConfigError("dimension must be >= 1");
        auto const potential = config.get_string("potential", "sine-well");
        GradientField grad;
        if (potential == "sine-well") {
            grad = sine_well_gradient(
                config.get_double("amplitude", 2.0 * std::numbers::pi));
        } else if (potential == "flat") {
            grad = flat_gradient();
        } else if (potential == "harmonic") {
            grad = harmonic_gradient(config.get_double("stiffness", 1.0));
        } else {
            throw ConfigError("unknown potential '" + potential + "'");
        }
        return std::make_unique<EulerMaruyamaModel>(
            static_cast<std::size_t>(dim), std::move(grad),
            config.get_double("beta", 1.0), config.get_double("dt", 0.01));
    }
    throw ConfigError("unknown model '" + kind + "'");
}

StatePartition build_partition(KeyValueConfig const& config,
                               ChainModel const& model) {
    std::vector<State> states;
    for (auto const& key : config.keys_with_prefix("state.")) {
        auto const label = parse_number<StateLabel>(
            std::string_view(key).substr(6), "state label in '" + key + "'");
        auto const value = config.get_string(key);
        auto const coords = split(value, ',');
        std::vector<Interval> box;
        for (auto c : coords) {
            auto const colon = c.find(':', 1);
            if (colon == std::string_view::npos) {
                throw ConfigError(fmt::format(
                    "state '{}': expected lo:hi, got '{}'", key, c));
            }
            box.push_back({parse_number<double>(c.substr(0, colon), "bound"),
                           parse_number<double>(c.substr(colon + 1), "bound")});
        }
        if (model.space() == SpaceKind::lattice) {
            if (coords.size() != 1) {
                throw ConfigError("lattice state '" + key +
                                  "' must be a single integer range");
            }
            auto const colon = coords[0].find(':', 1);
            states.push_back(State::lattice(
                label,
                parse_number<std::int64_t>(coords[0].substr(0, colon), "site"),
                parse_number<std::int64_t>(coords[0].substr(colon + 1), "site")));
        } else {
            if (box.size() != model.dimension()) {
                throw ConfigError(fmt::format(
                    "state '{}' has {} intervals, model dimension is {}", key,
                    box.size(), model.dimension()));
            }
            states.push_back(State::box(label, std::move(box)));
        }
    }
    if (states.empty()) {
        throw ConfigError(config.source() + ": no 'state.<label>' keys");
    }
    try {
        return StatePartition(std::move(states));
    } catch (ContractViolation const& e) {
        throw ConfigError(e.what());
    }
}

ChainPoint parse_point(std::string_view text, ChainModel const& model) {
    ChainPoint x;
    if (model.space() == SpaceKind::lattice) {
        x = lattice_point(parse_number<std::int64_t>(text, "lattice site"));
    } else {
        std::vector<double> coords;
        for (auto part : split(text, ',')) {
            coords.push_back(parse_number<double>(part, "coordinate"));
        }
        x = real_point(std::move(coords));
    }
    try {
        model.check_point(x);
    } catch (ContractViolation const& e) {
        throw ConfigError(e.what());
    }
    return x;
}

}  // namespace parrep
