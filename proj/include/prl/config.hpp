#pragma once

#include "prl/experiment.hpp"

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace prl {

inline constexpr const char* kVersion = "0.1.0";

/// Schema violation in a configuration file or override, tied to its key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& message)
        : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Flat "key = value" file. Values are scalars, booleans, quoted strings or
/// bracketed lists such as [20, 100, 300]. '#' starts a comment.
struct KeyValueFile {
    std::vector<std::pair<std::string, std::string>> entries;
};

KeyValueFile parse_key_value(std::istream& in, const std::string& source);
KeyValueFile read_key_value_file(const std::string& path);

/// Splits "[a, b]" into its trimmed, unquoted elements; a bare scalar is a
/// one-element list.
std::vector<std::string> split_list(const std::string& value);

/// Keys: Ns, Ts, cs, estimators, L, tau, portfolios_per_rep, replications,
/// base_seed, paper_z, factor_rule, factor_C, poet_rule, poet_C, poet_K,
/// gamma_shape, gamma_rate, sd_min, sd_max, corr_mean, corr_sd, corr_cap,
/// burn_in. Unknown keys and bad values throw ConfigError.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

ExperimentConfig experiment_config_from(const KeyValueFile& file, ExperimentConfig base = {});

/// Every setting in schema order, one "key = value" per line.
std::string canonical_string(const ExperimentConfig& config);

std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

/// "prl <version> seed=<seed> config_hash=<hash>" (without the comment marker).
std::string provenance_line(std::uint64_t seed, std::uint64_t config_hash);

}  // namespace prl
