#pragma once

// Experiment configuration: a flat key = value document (a TOML subset) and
// the typed experiment description built from it.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cascade/envgen.hpp"

namespace cascade {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ordered key/value pairs. Supports `key = value` lines, `#` comments,
/// quoted strings, booleans, numbers, flat arrays `[a, b]` and `[section]`
/// headers, which prefix subsequent keys with `section.`.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in);
    static KeyValueConfig load(const std::filesystem::path& path);

    /// Applies a `key=value` override.
    void set_override(const std::string& assignment);
    void set(const std::string& key, const std::string& raw_value);

    bool contains(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key,
                                      const std::vector<std::string>& fallback) const;

private:
    std::map<std::string, std::string> values_;
};

enum class EnvironmentKind { bernoulli, linear, logistic, letor };

std::string to_string(EnvironmentKind kind);

struct ExperimentConfig {
    EnvironmentKind env = EnvironmentKind::bernoulli;
    std::size_t L = 30;
    std::size_t K = 3;
    int d = 5;
    long T = 10000;
    double lambda = 1e-4;
    long replications = 100;
    std::uint64_t seed = 1;
    long log_every = 100;
    int parallelism = 1;
    std::vector<std::string> algorithms = {"gts", "ts-beta"};
    bool strict = false;

    // Bernoulli family.
    std::size_t n_inner = 20;
    /// Draw every instance from Beta(1, 10) instead of the random Beta grid.
    bool fixed_true_prior = false;
    /// When set, prior-informed policies receive Beta(1+c, 10−c).
    std::optional<int> prior_shift;

    // Contextual policies.
    double S = 1.0;
    double sigma_sq = 1.0;
    double delta = 0.0;
    bool square_sigma = true;
    double sample_scale = 1.0;
    int refit_every = 1;
    double irls_tol = 1e-8;
    int irls_max_iter = 100;
    bool project_to_ball = true;
    double newton_step_size = 1.0;
    double newton_sample_scale = 1.0;
    double linucb_confidence_scale = -1.0;

    // Gaussian TS.
    double gts_prior_mean = 0.0;
    double gts_prior_var = 1.0;
    double gts_noise_var = 1.0;

    // Environment.
    EnvironmentOptions environment;

    // LETOR replay.
    std::filesystem::path letor_instances;
    std::size_t letor_queries = 0;

    // Sweep.
    std::vector<int> sweep = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    long sweep_T = 1000;

    // Outputs.
    std::filesystem::path output = "results.csv";
    std::filesystem::path plot_output;
    std::filesystem::path svg_output;

    static ExperimentConfig from(const KeyValueConfig& kv);
    void validate() const;
    /// Canonical text of every field that affects results.
    std::string canonical() const;
    /// FNV-1a hash of canonical(), as 16 hex digits.
    std::string hash() const;
};

}  // namespace cascade
