#pragma once

// Ranking policies. Every policy selects a ranked list of K items for the
// current round and then consumes the cascade feedback for that list; only
// examined positions are read.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cascade/cascade_model.hpp"
#include "cascade/glm.hpp"
#include "cascade/posterior.hpp"

namespace cascade {

/// Per-round input to a policy. `features` holds one row per item and is
/// required by the contextual policies; non-contextual policies ignore it.
struct Context {
    std::size_t num_items = 0;
    const Matrix* features = nullptr;
};

class Policy {
public:
    virtual ~Policy() = default;

    virtual std::string name() const = 0;
    virtual RankedAction select(const Context& context) = 0;
    virtual void update(const RankedAction& action, const Feedback& feedback,
                        const Context& context) = 0;
    /// Restores the initial state, including the sampling stream.
    virtual void reset() = 0;
};

using PolicyPtr = std::unique_ptr<Policy>;

// ---------------------------------------------------------------------------
// Non-contextual policies

struct GtsOptions {
    std::size_t L = 0;
    std::size_t K = 0;
    double prior_mean = 0.0;
    double prior_var = 1.0;
    double noise_var = 1.0;
};

/// Gaussian Thompson sampling over independent item means.
class GaussianTsPolicy final : public Policy {
public:
    GaussianTsPolicy(GtsOptions options, std::uint64_t seed);

    std::string name() const override { return "gts"; }
    RankedAction select(const Context& context) override;
    void update(const RankedAction& action, const Feedback& feedback,
                const Context& context) override;
    void reset() override;

    const GaussianItemPosterior& posterior() const { return posterior_; }
    GaussianItemPosterior& posterior() { return posterior_; }

private:
    GtsOptions options_;
    std::uint64_t seed_;
    Rng rng_;
    GaussianItemPosterior posterior_;
    std::vector<double> samples_;
};

struct BetaPriorOptions {
    std::size_t L = 0;
    std::size_t K = 0;
    std::vector<double> prior_alphas;
    std::vector<double> prior_betas;
};

/// Thompson sampling with Beta-Bernoulli item posteriors.
class BetaTsPolicy final : public Policy {
public:
    BetaTsPolicy(BetaPriorOptions options, std::uint64_t seed);

    std::string name() const override { return "ts-beta"; }
    RankedAction select(const Context& context) override;
    void update(const RankedAction& action, const Feedback& feedback,
                const Context& context) override;
    void reset() override;

    const BetaItemPosterior& posterior() const { return posterior_; }

private:
    BetaPriorOptions options_;
    std::uint64_t seed_;
    Rng rng_;
    BetaItemPosterior posterior_;
    std::vector<double> samples_;
};

/// Bayes-UCB: rank by the posterior quantile at level max(1 − 1/t, 0.5).
class BayesUcbPolicy final : public Policy {
public:
    explicit BayesUcbPolicy(BetaPriorOptions options);

    std::string name() const override { return "bayes-ucb"; }
    RankedAction select(const Context& context) override;
    void update(const RankedAction& action, const Feedback& feedback,
                const Context& context) override;
    void reset() override;

    const BetaItemPosterior& posterior() const { return posterior_; }
    BetaItemPosterior& posterior() { return posterior_; }
    /// Index of `item` at round `t`.
    double index(std::size_t item, long t, double guess = -1.0) const;
    long round() const { return round_; }

private:
    BetaPriorOptions options_;
    BetaItemPosterior posterior_;
    long round_ = 0;
    std::vector<double> indices_;
};

/// Shared state of the frequentist non-contextual baselines.
struct EmpiricalItemStats {
    std::vector<long> counts;
    std::vector<double> sums;

    double mean(std::size_t item) const {
        return counts[item] > 0 ? sums[item] / static_cast<double>(counts[item]) : 0.0;
    }
};

/// μ̂ + √(1.5 log t / n); unobserved items get an infinite index.
double ucb1_index(double mean, long count, long t);

/// Bernoulli KL divergence d(p‖q).
double bernoulli_kl(double p, double q);

/// max{q ∈ [μ̂, 1] : n·d(μ̂‖q) ≤ log t + 3 log log t}, where the log log term is
/// taken as zero while log t ≤ 1. Unobserved items get index 1.
double klucb_index(double mean, long count, long t);

class CascadeUcb1Policy final : public Policy {
public:
    CascadeUcb1Policy(std::size_t L, std::size_t K);

    std::string name() const override { return "cascade-ucb1"; }
    RankedAction select(const Context& context) override;
    void update(const RankedAction& action, const Feedback& feedback,
                const Context& context) override;
    void reset() override;

    const EmpiricalItemStats& stats() const { return stats_; }

private:
    std::size_t L_;
    std::size_t K_;
    long round_ = 0;
    EmpiricalItemStats stats_;
    std::vector<double> indices_;
};

class CascadeKlUcbPolicy final : public Policy {
public:
    CascadeKlUcbPolicy(std::size_t L, std::size_t K);

    std::string name() const override { return "cascade-klucb"; }
    RankedAction select(const Context& context) override;
    void update(const RankedAction& action, const Feedback& feedback,
                const Context& context) override;
    void reset() override;

    const EmpiricalItemStats& stats() const { return stats_; }

private:
    std::size_t L_;
    std::size_t K_;
    long round_ = 0;
    EmpiricalItemStats stats_;
    std::vector<double> indices_;
};

// ---------------------------------------------------------------------------
// Contextual policies

struct ContextualOptions {
    int d = 1;
    std::size_t K = 1;
    double lambda = 1e-4;
    double S = 1.0;
    double sigma_sq = 1.0;
    /// Confidence level; a value ≤ 0 selects 1/(T(log T + 2)) from `horizon`.
    double delta = 0.0;
    long horizon = 10000;
    bool square_sigma = true;
    /// Multiplier on the sampling radius; 1 reproduces the algorithm as stated.
    double sample_scale = 1.0;

    double resolved_delta() const;
    /// Radius at round t using the δ_t schedule.
    double radius(long t) const;
};

/// Linear Thompson sampling with a regularized least-squares posterior.
class LinearTsPolicy final : public Policy {
public:
    LinearTsPolicy(ContextualOptions options, std::uint64_t seed);

    std::string name() const override { return "lints"; }
    RankedAction select(const Context& context) override;
    void update(const RankedAction& action, const Feedback& feedback,
                const Context& context) override;
    void reset() override;

    const EllipsoidState& ellipsoid() const { return ellipsoid_; }
    const Vector& last_sample() const { return sample_; }
    long round() const { return round_; }

private:
    ContextualOptions options_;
    std::uint64_t seed_;
    Rng rng_;
    EllipsoidState ellipsoid_;
    Vector sample_;
    long round_ = 0;
};

struct GlmOptions : ContextualOptions {
    LinkFunction link;
    IrlsOptions irls;
    /// Refit the estimate every `refit_every` rounds (1 = every round).
    int refit_every = 1;
    bool project_to_ball = true;
};

/// GLM Thompson sampling with an IRLS estimate and a Laplace posterior
/// N(θ̂, β²V⁻¹/κ²).
class GlmTsPolicy final : public Policy {
public:
    GlmTsPolicy(GlmOptions options, std::uint64_t seed);

    std::string name() const override { return "glmts"; }
    RankedAction select(const Context& context) override;
    void update(const RankedAction& action, const Feedback& feedback,
                const Context& context) override;
    void reset() override;

    /// Re-solves the estimate if new data arrived since the last fit.
    void refit();

    const EllipsoidState& ellipsoid() const { return ellipsoid_; }
    const GlmDataset& dataset() const { return data_; }
    /// Estimate used for sampling (projected onto the S-ball when enabled).
    const Vector& theta_hat() const { return theta_hat_; }
    /// Unprojected IRLS solution used as warm start.
    const Vector& theta_mle() const { return theta_mle_; }
    double kappa() const { return kappa_; }
    /// Laplace sampling covariance β_t²V⁻¹/κ² at round t.
    Matrix sampling_covariance(long t) const;
    /// One draw from N(θ̂, sampling_covariance(t)) at the current state.
    Vector sample_parameter(long t);
    long round() const { return round_; }
    int last_irls_iterations() const { return last_iterations_; }

private:
    GlmOptions options_;
    std::uint64_t seed_;
    Rng rng_;
    EllipsoidState ellipsoid_;
    GlmDataset data_;
    Vector theta_mle_;
    Vector theta_hat_;
    double kappa_;
    long round_ = 0;
    bool dirty_ = false;
    int last_iterations_ = 0;
};

struct NewtonOptions {
    int d = 1;
    std::size_t K = 1;
    double step_size = 1.0;
    /// Multiplier on the V⁻¹ sampling covariance's standard deviation.
    double sample_scale = 1.0;
};

/// Logistic Thompson sampling with one online Newton step per examined item.
class NewtonGlmTsPolicy final : public Policy {
public:
    NewtonGlmTsPolicy(NewtonOptions options, std::uint64_t seed);

    std::string name() const override { return "newton-glmts"; }
    RankedAction select(const Context& context) override;
    void update(const RankedAction& action, const Feedback& feedback,
                const Context& context) override;
    void reset() override;

    const EllipsoidState& ellipsoid() const { return ellipsoid_; }
    const Vector& theta_hat() const { return theta_; }
    long counter() const { return counter_; }
    /// Positions consumed by the most recent update.
    int last_update_steps() const { return last_steps_; }

private:
    NewtonOptions options_;
    std::uint64_t seed_;
    Rng rng_;
    EllipsoidState ellipsoid_;
    Vector theta_;
    long counter_ = 1;
    int last_steps_ = 0;
};

struct LinUcbOptions : ContextualOptions {
    /// Width multiplier c; a negative value uses the radius β_t(δ_t).
    double confidence_scale = -1.0;
};

/// xᵀθ̂ + c‖x‖_{V⁻¹} with the same examined-position updates as LinearTsPolicy.
class CascadeLinUcbPolicy final : public Policy {
public:
    explicit CascadeLinUcbPolicy(LinUcbOptions options);

    std::string name() const override { return "cascade-linucb"; }
    RankedAction select(const Context& context) override;
    void update(const RankedAction& action, const Feedback& feedback,
                const Context& context) override;
    void reset() override;

    const EllipsoidState& ellipsoid() const { return ellipsoid_; }
    /// UCB index of every item at the next round.
    std::vector<double> indices(const Matrix& features) const;

private:
    LinUcbOptions options_;
    EllipsoidState ellipsoid_;
    long round_ = 0;
};

// ---------------------------------------------------------------------------
// Factories and registry

PolicyPtr gts_policy(std::size_t L, std::size_t K, double prior_mean, double prior_var,
                     double noise_var, std::uint64_t seed);
PolicyPtr lints_policy(const ContextualOptions& options, std::uint64_t seed);
PolicyPtr glmts_policy(const GlmOptions& options, std::uint64_t seed);
PolicyPtr newton_glmts_policy(int d, std::size_t K, double step_size, std::uint64_t seed);
PolicyPtr ts_beta_policy(std::size_t L, std::size_t K, std::vector<double> prior_alphas,
                         std::vector<double> prior_betas, std::uint64_t seed);
PolicyPtr bayes_ucb_policy(std::size_t L, std::size_t K, std::vector<double> prior_alphas,
                           std::vector<double> prior_betas);
PolicyPtr cascade_ucb1_policy(std::size_t L, std::size_t K);
PolicyPtr cascade_klucb_policy(std::size_t L, std::size_t K);
PolicyPtr cascade_linucb_policy(const LinUcbOptions& options);

/// Everything a registered policy may need; each policy reads its own subset.
struct PolicyParams {
    std::size_t L = 0;
    std::size_t K = 0;
    int d = 0;
    long horizon = 10000;

    GtsOptions gts;
    std::vector<double> prior_alphas;
    std::vector<double> prior_betas;

    ContextualOptions contextual;
    LinkFunction link;
    IrlsOptions irls;
    int refit_every = 1;
    bool project_to_ball = true;
    double newton_step_size = 1.0;
    double newton_sample_scale = 1.0;
    double linucb_confidence_scale = -1.0;
};

/// Names in registry order.
const std::vector<std::string>& algorithm_names();
bool is_contextual(const std::string& name);
/// Whether the policy consumes the per-item Beta prior.
bool is_prior_informed(const std::string& name);
PolicyPtr make_policy(const std::string& name, const PolicyParams& params, std::uint64_t seed);

}  // namespace cascade
