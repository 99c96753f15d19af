#include "prl/config.hpp"

#include "prl/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace prl {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

/// Drops a '#' comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quote) {
            if (ch == quote) quote = 0;
        } else if (ch == '"' || ch == '\'') {
            quote = ch;
        } else if (ch == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ConfigError(key, "expected a number, got '" + text + "'");
    }
    return v;
}

long long to_integer(const std::string& key, const std::string& text) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError(key, "expected an integer, got '" + text + "'");
    }
    return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
    }
    return v;
}

int to_int(const std::string& key, const std::string& text) {
    const long long v = to_integer(key, text);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError(key, "integer out of range: " + text);
    }
    return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::vector<std::string> non_empty_list(const std::string& key, const std::string& value) {
    auto items = split_list(value);
    if (items.empty()) throw ConfigError(key, "list must not be empty");
    return items;
}

ThresholdRule to_rule(const std::string& key, const std::string& text, double scad_a) {
    try {
        ThresholdRule rule{parse_threshold_kind(unquote(text)), scad_a};
        return rule;
    } catch (const std::invalid_argument&) {
        throw ConfigError(key, "expected hard, soft or scad, got '" + text + "'");
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F f) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + f(items[i]);
    return out + "]";
}

}  // namespace

KeyValueFile parse_key_value(std::istream& in, const std::string& source) {
    KeyValueFile file;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = trim(strip_comment(line));
        if (content.empty()) continue;
        if (content.front() == '[' && content.back() == ']' &&
            content.find('=') == std::string::npos) {
            continue;  // TOML-style section headers carry no meaning here
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw DataError(source + ": line " + std::to_string(line_no) +
                            ": expected 'key = value'");
        }
        std::string key = trim(std::string_view(content).substr(0, eq));
        std::string value = trim(std::string_view(content).substr(eq + 1));
        if (key.empty()) {
            throw DataError(source + ": line " + std::to_string(line_no) + ": empty key");
        }
        for (const auto& [k, v] : file.entries) {
            if (k == key) throw ConfigError(key, "duplicate key at line " + std::to_string(line_no));
        }
        file.entries.emplace_back(std::move(key), std::move(value));
    }
    return file;
}

KeyValueFile read_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path + "'");
    return parse_key_value(in, path);
}

std::vector<std::string> split_list(const std::string& value) {
    std::string body = trim(value);
    if (!body.empty() && body.front() == '[') {
        if (body.back() != ']') throw std::invalid_argument("unterminated list: " + value);
        body = body.substr(1, body.size() - 2);
    }
    std::vector<std::string> items;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = unquote(trim(item));
        if (!t.empty()) items.push_back(t);
    }
    return items;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& raw) {
    const std::string value = unquote(raw);
    CalibrationParams& cal = config.calibration;
    try {
        if (key == "Ns" || key == "Ts") {
            std::vector<Eigen::Index> out;
            for (const auto& item : non_empty_list(key, raw)) {
                const long long v = to_integer(key, item);
                if (v < 1) throw ConfigError(key, "entries must be positive");
                out.push_back(static_cast<Eigen::Index>(v));
            }
            (key == "Ns" ? config.Ns : config.Ts) = std::move(out);
        } else if (key == "cs") {
            std::vector<double> out;
            for (const auto& item : non_empty_list(key, raw)) {
                const double c = to_double(key, item);
                if (c < 1.0) throw ConfigError(key, "gross exposures must be >= 1");
                out.push_back(c);
            }
            config.cs = std::move(out);
        } else if (key == "estimators") {
            std::vector<EstimatorKind> out;
            for (const auto& item : non_empty_list(key, raw)) {
                try {
                    out.push_back(parse_estimator_kind(item));
                } catch (const std::invalid_argument&) {
                    throw ConfigError(key, "unknown estimator '" + item +
                                               "' (expected sample, factor or poet)");
                }
            }
            config.estimators = std::move(out);
        } else if (key == "L") {
            config.L = to_int(key, value);
        } else if (key == "tau") {
            config.tau = to_double(key, value);
        } else if (key == "portfolios_per_rep") {
            config.portfolios_per_rep = to_int(key, value);
        } else if (key == "replications") {
            config.replications = to_int(key, value);
        } else if (key == "base_seed") {
            config.base_seed = to_unsigned(key, value);
        } else if (key == "paper_z") {
            config.paper_z = to_bool(key, value);
        } else if (key == "factor_rule") {
            config.factor_rule = to_rule(key, value, config.factor_rule.scad_a);
        } else if (key == "factor_C") {
            config.factor_C = to_double(key, value);
        } else if (key == "poet_rule") {
            config.poet_rule = to_rule(key, value, config.poet_rule.scad_a);
        } else if (key == "poet_C") {
            config.poet_C = to_double(key, value);
        } else if (key == "poet_K") {
            config.poet_K = to_int(key, value);
        } else if (key == "gamma_shape") {
            cal.gamma_shape = to_double(key, value);
        } else if (key == "gamma_rate") {
            cal.gamma_rate = to_double(key, value);
        } else if (key == "sd_min") {
            cal.sd_min = to_double(key, value);
        } else if (key == "sd_max") {
            cal.sd_max = to_double(key, value);
        } else if (key == "corr_mean") {
            cal.corr_mean = to_double(key, value);
        } else if (key == "corr_sd") {
            cal.corr_sd = to_double(key, value);
        } else if (key == "corr_cap") {
            cal.corr_cap = to_double(key, value);
        } else if (key == "burn_in") {
            cal.burn_in = to_int(key, value);
        } else {
            throw ConfigError(key, "unknown key");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
    }
}

ExperimentConfig experiment_config_from(const KeyValueFile& file, ExperimentConfig base) {
    for (const auto& [key, value] : file.entries) apply_setting(base, key, value);
    try {
        base.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        const auto colon = msg.find(':');
        throw ConfigError(colon == std::string::npos ? "config" : msg.substr(0, colon),
                          colon == std::string::npos ? msg : trim(msg.substr(colon + 1)));
    }
    return base;
}

std::string canonical_string(const ExperimentConfig& c) {
    const CalibrationParams& cal = c.calibration;
    std::ostringstream out;
    out << "Ns = " << join(c.Ns, [](auto v) { return std::to_string(v); }) << '\n'
        << "Ts = " << join(c.Ts, [](auto v) { return std::to_string(v); }) << '\n'
        << "cs = " << join(c.cs, [](double v) { return fmt(v); }) << '\n'
        << "estimators = " << join(c.estimators, [](EstimatorKind k) { return to_string(k); })
        << '\n'
        << "L = " << c.L << '\n'
        << "tau = " << fmt(c.tau) << '\n'
        << "portfolios_per_rep = " << c.portfolios_per_rep << '\n'
        << "replications = " << c.replications << '\n'
        << "base_seed = " << c.base_seed << '\n'
        << "paper_z = " << (c.paper_z ? "true" : "false") << '\n'
        << "factor_rule = " << to_string(c.factor_rule.kind) << '\n'
        << "factor_C = " << fmt(c.factor_C) << '\n'
        << "poet_rule = " << to_string(c.poet_rule.kind) << '\n'
        << "poet_C = " << fmt(c.poet_C) << '\n'
        << "poet_K = " << c.poet_K << '\n'
        << "gamma_shape = " << fmt(cal.gamma_shape) << '\n'
        << "gamma_rate = " << fmt(cal.gamma_rate) << '\n'
        << "sd_min = " << fmt(cal.sd_min) << '\n'
        << "sd_max = " << fmt(cal.sd_max) << '\n'
        << "corr_mean = " << fmt(cal.corr_mean) << '\n'
        << "corr_sd = " << fmt(cal.corr_sd) << '\n'
        << "corr_cap = " << fmt(cal.corr_cap) << '\n'
        << "burn_in = " << cal.burn_in << '\n';
    return out.str();
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string provenance_line(std::uint64_t seed, std::uint64_t config_hash) {
    return std::string("prl ") + kVersion + " seed=" + std::to_string(seed) +
           " config_hash=" + hex64(config_hash);
}

}  // namespace prl
