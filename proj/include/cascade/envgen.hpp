#pragma once

// Synthetic bandit instances for the Bernoulli, linear and logistic
// experiment families, and the environment that plays them.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascade/cascade_model.hpp"
#include "cascade/policy.hpp"
#include "cascade/posterior.hpp"

namespace cascade {

enum class InstanceKind { bernoulli, linear, logistic };

std::string to_string(InstanceKind kind);
InstanceKind parse_instance_kind(const std::string& text);

/// Per-item Beta(β₁, β₂) prior plus the misspecification shift it was built with.
struct PriorSpec {
    std::vector<double> beta1;
    std::vector<double> beta2;
    int shift = 0;

    bool operator==(const PriorSpec&) const = default;
};

struct BanditInstance {
    InstanceKind kind = InstanceKind::bernoulli;
    std::size_t L = 0;
    std::size_t K = 0;
    int d = 0;
    /// Attraction probability (or mean feedback) of each item.
    std::vector<double> means;
    /// Unknown parameter; empty for Bernoulli instances and for replayed data.
    Vector theta_star;
    /// One row per item; empty for Bernoulli instances.
    Matrix features;
    PriorSpec prior;
    /// Free-form provenance, e.g. the LETOR query id.
    std::string source;

    void validate() const;
};

/// Attraction means Beta(β₁,ᵢ, 10) with β₁,ᵢ uniform on {1, …, 10}: one prior draw.
PriorSpec sample_beta_prior(std::size_t L, Rng& rng);

/// Draws μᵢ ~ Beta(β₁,ᵢ, β₂,ᵢ) for every item of `prior`.
BanditInstance sample_bernoulli_instance(const PriorSpec& prior, std::size_t K, Rng& rng);

/// n_outer prior draws, each with n_inner instances.
std::vector<BanditInstance> sample_beta_instances(std::size_t L, std::size_t K, Rng& rng,
                                                  std::size_t n_outer = 20,
                                                  std::size_t n_inner = 20);

/// Beta(1 + c, 10 − c) for every item; c must lie in [0, 8].
PriorSpec misspecified_prior(int c, std::size_t L);

/// θ* and item features uniform on [0,1]^d, normalized to unit norm; the
/// attraction of item i is clip(xᵢᵀθ*, 0, 1).
BanditInstance sample_linear_instance(std::size_t L, std::size_t K, int d, Rng& rng);

/// As the linear instance with μᵢ = sigmoid(xᵢᵀθ*) and matched Beta priors
/// Beta(10μ/(1−μ), 10).
BanditInstance sample_logistic_instance(std::size_t L, std::size_t K, int d, Rng& rng);

/// Unit-norm vector uniform on [0,1]^d before normalization.
Vector sample_unit_nonnegative(int d, Rng& rng);

/// One cascade round on a fixed instance: draws an attraction for every item
/// (so the stream consumption does not depend on the action) and returns the
/// feedback of the displayed list.
Feedback env_step(const BanditInstance& instance, const RankedAction& action, Rng& rng);

nlohmann::json to_json(const BanditInstance& instance);
BanditInstance instance_from_json(const nlohmann::json& doc);
void save_instance(const BanditInstance& instance, const std::filesystem::path& path);
BanditInstance load_instance(const std::filesystem::path& path);

enum class LinearFeedbackMode {
    /// Bernoulli(μᵢ) attraction with the cascade stopping rule.
    bernoulli,
    /// y = xᵀθ* + N(0, σ²), stopping at the first y above a threshold.
    gaussian,
};

struct EnvironmentOptions {
    LinearFeedbackMode linear_feedback = LinearFeedbackMode::bernoulli;
    double noise_sd = 0.1;
    double threshold = 0.5;
    /// Redraw item features every round (contextual instances with θ* only).
    bool redraw_features = false;
};

/// Plays one instance round by round. Each round first draws all per-item
/// randomness, so two environments built from the same seed see identical
/// draws regardless of the actions taken.
class Environment {
public:
    Environment(BanditInstance instance, EnvironmentOptions options, std::uint64_t seed);

    void begin_round();
    Context context() const;
    const std::vector<double>& means() const { return means_; }
    const Matrix& features() const { return features_; }
    const BanditInstance& instance() const { return instance_; }

    Feedback step(const RankedAction& action) const;
    double regret(const RankedAction& action) const;
    RankedAction best_action() const;

private:
    void refresh_means();

    BanditInstance instance_;
    EnvironmentOptions options_;
    Rng rng_;
    Matrix features_;
    std::vector<double> means_;
    std::vector<double> draws_;
    double best_value_ = 0.0;
};

}  // namespace cascade
