#include "cascade/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cascade {

namespace {

void check_k(std::size_t L, std::size_t K) {
    if (K == 0 || K > L) throw std::invalid_argument("need 1 <= K <= L");
}

const Matrix& require_features(const Context& context, int d) {
    if (context.features == nullptr) {
        throw std::invalid_argument("contextual policy called without item features");
    }
    if (context.features->cols() != d) {
        throw std::invalid_argument("feature dimension does not match the policy");
    }
    return *context.features;
}

bool clicked_at(const Feedback& fb, std::size_t position) {
    return fb.values[position] >= 0.5;
}

RankedAction rank_by_scores(const Vector& scores, std::size_t K) {
    const auto n = static_cast<std::size_t>(scores.size());
    return RankedAction(top_k(std::span<const double>(scores.data(), n), K), n);
}

}  // namespace

// ---------------------------------------------------------------------------

GaussianTsPolicy::GaussianTsPolicy(GtsOptions options, std::uint64_t seed)
    : options_(options),
      seed_(seed),
      rng_(seed),
      posterior_(options.L, options.prior_mean, options.prior_var, options.noise_var),
      samples_(options.L) {
    check_k(options.L, options.K);
}

RankedAction GaussianTsPolicy::select(const Context&) {
    for (std::size_t i = 0; i < options_.L; ++i) samples_[i] = posterior_.sample(i, rng_);
    return RankedAction(top_k(samples_, options_.K), options_.L);
}

void GaussianTsPolicy::update(const RankedAction& action, const Feedback& feedback,
                              const Context&) {
    for (std::size_t j = 0; j < feedback.num_examined(); ++j) {
        posterior_.observe(action[j], feedback.values[j]);
    }
}

void GaussianTsPolicy::reset() {
    rng_.seed(seed_);
    posterior_ = GaussianItemPosterior(options_.L, options_.prior_mean, options_.prior_var,
                                       options_.noise_var);
}

// ---------------------------------------------------------------------------

BetaTsPolicy::BetaTsPolicy(BetaPriorOptions options, std::uint64_t seed)
    : options_(std::move(options)),
      seed_(seed),
      rng_(seed),
      posterior_(options_.prior_alphas, options_.prior_betas),
      samples_(options_.L) {
    check_k(options_.L, options_.K);
    if (posterior_.num_items() != options_.L) {
        throw std::invalid_argument("prior length does not match the number of items");
    }
}

RankedAction BetaTsPolicy::select(const Context&) {
    for (std::size_t i = 0; i < options_.L; ++i) samples_[i] = posterior_.sample(i, rng_);
    return RankedAction(top_k(samples_, options_.K), options_.L);
}

void BetaTsPolicy::update(const RankedAction& action, const Feedback& feedback, const Context&) {
    for (std::size_t j = 0; j < feedback.num_examined(); ++j) {
        posterior_.observe(action[j], clicked_at(feedback, j));
    }
}

void BetaTsPolicy::reset() {
    rng_.seed(seed_);
    posterior_ = BetaItemPosterior(options_.prior_alphas, options_.prior_betas);
}

// ---------------------------------------------------------------------------

BayesUcbPolicy::BayesUcbPolicy(BetaPriorOptions options)
    : options_(std::move(options)),
      posterior_(options_.prior_alphas, options_.prior_betas),
      indices_(options_.L) {
    check_k(options_.L, options_.K);
    if (posterior_.num_items() != options_.L) {
        throw std::invalid_argument("prior length does not match the number of items");
    }
}

double BayesUcbPolicy::index(std::size_t item, long t, double guess) const {
    const double q = std::max(1.0 - 1.0 / static_cast<double>(std::max(t, 1L)), 0.5);
    return posterior_.quantile(item, q, guess);
}

RankedAction BayesUcbPolicy::select(const Context&) {
    ++round_;
    // The previous index is a close starting point: q and the posterior move
    // little between rounds.
    for (std::size_t i = 0; i < options_.L; ++i) {
        indices_[i] = index(i, round_, round_ > 1 ? indices_[i] : -1.0);
    }
    return RankedAction(top_k(indices_, options_.K), options_.L);
}

void BayesUcbPolicy::update(const RankedAction& action, const Feedback& feedback,
                            const Context&) {
    for (std::size_t j = 0; j < feedback.num_examined(); ++j) {
        posterior_.observe(action[j], clicked_at(feedback, j));
    }
}

void BayesUcbPolicy::reset() {
    round_ = 0;
    std::fill(indices_.begin(), indices_.end(), 0.0);
    posterior_ = BetaItemPosterior(options_.prior_alphas, options_.prior_betas);
}

// ---------------------------------------------------------------------------

double ucb1_index(double mean, long count, long t) {
    if (count <= 0) return std::numeric_limits<double>::infinity();
    return mean + std::sqrt(1.5 * std::log(static_cast<double>(std::max(t, 1L))) /
                            static_cast<double>(count));
}

double bernoulli_kl(double p, double q) {
    constexpr double eps = 1e-15;
    p = std::clamp(p, 0.0, 1.0);
    q = std::clamp(q, eps, 1.0 - eps);
    double kl = 0.0;
    if (p > 0.0) kl += p * std::log(p / q);
    if (p < 1.0) kl += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    return kl;
}

double klucb_index(double mean, long count, long t) {
    if (count <= 0) return 1.0;
    if (mean >= 1.0) return 1.0;
    const double log_t = std::log(static_cast<double>(std::max(t, 1L)));
    const double budget =
        (log_t + (log_t > 1.0 ? 3.0 * std::log(log_t) : 0.0)) / static_cast<double>(count);
    double lo = mean;
    double hi = 1.0;
    for (int iter = 0; iter < 100 && hi - lo > 1e-12; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (bernoulli_kl(mean, mid) <= budget) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

namespace {

void observe_empirical(EmpiricalItemStats& stats, const RankedAction& action,
                       const Feedback& feedback) {
    for (std::size_t j = 0; j < feedback.num_examined(); ++j) {
        stats.counts[action[j]] += 1;
        stats.sums[action[j]] += feedback.values[j];
    }
}

}  // namespace

CascadeUcb1Policy::CascadeUcb1Policy(std::size_t L, std::size_t K)
    : L_(L), K_(K), stats_{std::vector<long>(L, 0), std::vector<double>(L, 0.0)}, indices_(L) {
    check_k(L, K);
}

RankedAction CascadeUcb1Policy::select(const Context&) {
    ++round_;
    for (std::size_t i = 0; i < L_; ++i) {
        indices_[i] = ucb1_index(stats_.mean(i), stats_.counts[i], round_);
    }
    return RankedAction(top_k(indices_, K_), L_);
}

void CascadeUcb1Policy::update(const RankedAction& action, const Feedback& feedback,
                               const Context&) {
    observe_empirical(stats_, action, feedback);
}

void CascadeUcb1Policy::reset() {
    round_ = 0;
    stats_ = {std::vector<long>(L_, 0), std::vector<double>(L_, 0.0)};
}

CascadeKlUcbPolicy::CascadeKlUcbPolicy(std::size_t L, std::size_t K)
    : L_(L), K_(K), stats_{std::vector<long>(L, 0), std::vector<double>(L, 0.0)}, indices_(L) {
    check_k(L, K);
}

RankedAction CascadeKlUcbPolicy::select(const Context&) {
    ++round_;
    for (std::size_t i = 0; i < L_; ++i) {
        // Unobserved items are forced in ahead of any observed item.
        indices_[i] = stats_.counts[i] == 0 ? 2.0
                                            : klucb_index(stats_.mean(i), stats_.counts[i], round_);
    }
    return RankedAction(top_k(indices_, K_), L_);
}

void CascadeKlUcbPolicy::update(const RankedAction& action, const Feedback& feedback,
                                const Context&) {
    observe_empirical(stats_, action, feedback);
}

void CascadeKlUcbPolicy::reset() {
    round_ = 0;
    stats_ = {std::vector<long>(L_, 0), std::vector<double>(L_, 0.0)};
}

// ---------------------------------------------------------------------------

double ContextualOptions::resolved_delta() const {
    if (delta > 0.0) return delta;
    const double T = static_cast<double>(std::max(horizon, 1L));
    return 1.0 / (T * (std::log(T) + 2.0));
}

double ContextualOptions::radius(long t) const {
    RadiusParams params;
    params.sigma_sq = sigma_sq;
    params.lambda = lambda;
    params.S = S;
    params.d = d;
    params.delta = delta_schedule(resolved_delta(), std::max(t, 1L));
    params.square_sigma = square_sigma;
    return radius_beta_t(params, t);
}

LinearTsPolicy::LinearTsPolicy(ContextualOptions options, std::uint64_t seed)
    : options_(options),
      seed_(seed),
      rng_(seed),
      ellipsoid_(options.d, options.lambda),
      sample_(Vector::Zero(options.d)) {
    if (options.K == 0) throw std::invalid_argument("K must be positive");
}

RankedAction LinearTsPolicy::select(const Context& context) {
    const Matrix& X = require_features(context, options_.d);
    ++round_;
    const double scale = options_.sample_scale * options_.radius(round_);
    if (scale > 0.0) {
        sample_ = ellipsoid_.sample(ellipsoid_.theta_hat(), scale, rng_);
    } else {
        sample_ = ellipsoid_.theta_hat();
    }
    return rank_by_scores(X * sample_, options_.K);
}

void LinearTsPolicy::update(const RankedAction& action, const Feedback& feedback,
                            const Context& context) {
    const Matrix& X = require_features(context, options_.d);
    for (std::size_t j = 0; j < feedback.num_examined(); ++j) {
        ellipsoid_.rank_one_update(X.row(static_cast<Eigen::Index>(action[j])).transpose(), 1.0,
                                   feedback.values[j]);
    }
}

void LinearTsPolicy::reset() {
    rng_.seed(seed_);
    ellipsoid_ = EllipsoidState(options_.d, options_.lambda);
    sample_ = Vector::Zero(options_.d);
    round_ = 0;
}

// ---------------------------------------------------------------------------

GlmTsPolicy::GlmTsPolicy(GlmOptions options, std::uint64_t seed)
    : options_(std::move(options)),
      seed_(seed),
      rng_(seed),
      ellipsoid_(options_.d, options_.lambda),
      data_(options_.d),
      theta_mle_(Vector::Zero(options_.d)),
      theta_hat_(Vector::Zero(options_.d)),
      kappa_(options_.link.kappa(options_.S)) {
    if (options_.K == 0) throw std::invalid_argument("K must be positive");
    if (options_.refit_every < 1) throw std::invalid_argument("refit_every must be >= 1");
}

void GlmTsPolicy::refit() {
    if (!dirty_) return;
    const IrlsResult fit = irls_solve(data_, options_.lambda, options_.irls, &theta_mle_,
                                      options_.link);
    last_iterations_ = fit.iterations;
    theta_mle_ = fit.theta;
    theta_hat_ = options_.project_to_ball ? project_to_ball(theta_mle_, options_.S) : theta_mle_;
    dirty_ = false;
}

Matrix GlmTsPolicy::sampling_covariance(long t) const {
    const double beta = options_.sample_scale * options_.radius(t);
    return (beta * beta / (kappa_ * kappa_)) * ellipsoid_.gram_inv();
}

RankedAction GlmTsPolicy::select(const Context& context) {
    const Matrix& X = require_features(context, options_.d);
    ++round_;
    if ((round_ - 1) % options_.refit_every == 0) refit();
    return rank_by_scores(X * sample_parameter(round_), options_.K);
}

Vector GlmTsPolicy::sample_parameter(long t) {
    const double scale = options_.sample_scale * options_.radius(t) / kappa_;
    return scale > 0.0 ? ellipsoid_.sample(theta_hat_, scale, rng_) : theta_hat_;
}

void GlmTsPolicy::update(const RankedAction& action, const Feedback& feedback,
                         const Context& context) {
    const Matrix& X = require_features(context, options_.d);
    for (std::size_t j = 0; j < feedback.num_examined(); ++j) {
        const Vector x = X.row(static_cast<Eigen::Index>(action[j])).transpose();
        data_.add(x, feedback.values[j]);
        ellipsoid_.rank_one_update(x, options_.link.derivative(theta_hat_.dot(x)));
        dirty_ = true;
    }
}

void GlmTsPolicy::reset() {
    rng_.seed(seed_);
    ellipsoid_ = EllipsoidState(options_.d, options_.lambda);
    data_ = GlmDataset(options_.d);
    theta_mle_ = Vector::Zero(options_.d);
    theta_hat_ = Vector::Zero(options_.d);
    round_ = 0;
    dirty_ = false;
    last_iterations_ = 0;
}

// ---------------------------------------------------------------------------

NewtonGlmTsPolicy::NewtonGlmTsPolicy(NewtonOptions options, std::uint64_t seed)
    : options_(options),
      seed_(seed),
      rng_(seed),
      ellipsoid_(options.d, static_cast<double>(options.K)),
      theta_(Vector::Zero(options.d)) {
    if (options.K == 0) throw std::invalid_argument("K must be positive");
    if (!(options.step_size > 0.0)) throw std::invalid_argument("step size must be positive");
}

RankedAction NewtonGlmTsPolicy::select(const Context& context) {
    const Matrix& X = require_features(context, options_.d);
    const Vector sample = options_.sample_scale > 0.0
                              ? ellipsoid_.sample(theta_, options_.sample_scale, rng_)
                              : theta_;
    return rank_by_scores(X * sample, options_.K);
}

void NewtonGlmTsPolicy::update(const RankedAction& action, const Feedback& feedback,
                               const Context& context) {
    const Matrix& X = require_features(context, options_.d);
    last_steps_ = 0;
    for (std::size_t j = 0; j < feedback.num_examined(); ++j) {
        const Vector x = X.row(static_cast<Eigen::Index>(action[j])).transpose();
        const double sign = clicked_at(feedback, j) ? 1.0 : -1.0;
        ellipsoid_.rank_one_update(x, 1.0);
        const double gain = options_.step_size * sigmoid(-sign * theta_.dot(x)) * sign;
        theta_.noalias() += gain * (ellipsoid_.gram_inv() * x);
        ++last_steps_;
    }
    counter_ += feedback.click_position;
}

void NewtonGlmTsPolicy::reset() {
    rng_.seed(seed_);
    ellipsoid_ = EllipsoidState(options_.d, static_cast<double>(options_.K));
    theta_ = Vector::Zero(options_.d);
    counter_ = 1;
    last_steps_ = 0;
}

// ---------------------------------------------------------------------------

CascadeLinUcbPolicy::CascadeLinUcbPolicy(LinUcbOptions options)
    : options_(options), ellipsoid_(options.d, options.lambda) {
    if (options.K == 0) throw std::invalid_argument("K must be positive");
}

std::vector<double> CascadeLinUcbPolicy::indices(const Matrix& features) const {
    const long t = round_ + 1;
    const double c =
        options_.confidence_scale >= 0.0 ? options_.confidence_scale : options_.radius(t);
    const Vector means = features * ellipsoid_.theta_hat();
    const Matrix projected = features * ellipsoid_.gram_inv();
    std::vector<double> out(static_cast<std::size_t>(features.rows()));
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        const double norm_sq = std::max(0.0, projected.row(i).dot(features.row(i)));
        out[static_cast<std::size_t>(i)] = means[i] + c * std::sqrt(norm_sq);
    }
    return out;
}

RankedAction CascadeLinUcbPolicy::select(const Context& context) {
    const Matrix& X = require_features(context, options_.d);
    const auto scores = indices(X);
    ++round_;
    return RankedAction(top_k(scores, options_.K), scores.size());
}

void CascadeLinUcbPolicy::update(const RankedAction& action, const Feedback& feedback,
                                 const Context& context) {
    const Matrix& X = require_features(context, options_.d);
    for (std::size_t j = 0; j < feedback.num_examined(); ++j) {
        ellipsoid_.rank_one_update(X.row(static_cast<Eigen::Index>(action[j])).transpose(), 1.0,
                                   feedback.values[j]);
    }
}

void CascadeLinUcbPolicy::reset() {
    ellipsoid_ = EllipsoidState(options_.d, options_.lambda);
    round_ = 0;
}

// ---------------------------------------------------------------------------

PolicyPtr gts_policy(std::size_t L, std::size_t K, double prior_mean, double prior_var,
                     double noise_var, std::uint64_t seed) {
    return std::make_unique<GaussianTsPolicy>(GtsOptions{L, K, prior_mean, prior_var, noise_var},
                                              seed);
}

PolicyPtr lints_policy(const ContextualOptions& options, std::uint64_t seed) {
    return std::make_unique<LinearTsPolicy>(options, seed);
}

PolicyPtr glmts_policy(const GlmOptions& options, std::uint64_t seed) {
    return std::make_unique<GlmTsPolicy>(options, seed);
}

PolicyPtr newton_glmts_policy(int d, std::size_t K, double step_size, std::uint64_t seed) {
    return std::make_unique<NewtonGlmTsPolicy>(NewtonOptions{d, K, step_size, 1.0}, seed);
}

PolicyPtr ts_beta_policy(std::size_t L, std::size_t K, std::vector<double> prior_alphas,
                         std::vector<double> prior_betas, std::uint64_t seed) {
    return std::make_unique<BetaTsPolicy>(
        BetaPriorOptions{L, K, std::move(prior_alphas), std::move(prior_betas)}, seed);
}

PolicyPtr bayes_ucb_policy(std::size_t L, std::size_t K, std::vector<double> prior_alphas,
                           std::vector<double> prior_betas) {
    return std::make_unique<BayesUcbPolicy>(
        BetaPriorOptions{L, K, std::move(prior_alphas), std::move(prior_betas)});
}

PolicyPtr cascade_ucb1_policy(std::size_t L, std::size_t K) {
    return std::make_unique<CascadeUcb1Policy>(L, K);
}

PolicyPtr cascade_klucb_policy(std::size_t L, std::size_t K) {
    return std::make_unique<CascadeKlUcbPolicy>(L, K);
}

PolicyPtr cascade_linucb_policy(const LinUcbOptions& options) {
    return std::make_unique<CascadeLinUcbPolicy>(options);
}

const std::vector<std::string>& algorithm_names() {
    static const std::vector<std::string> names = {
        "gts",    "lints",     "glmts",        "newton-glmts",  "ts-beta",
        "bayes-ucb", "cascade-ucb1", "cascade-klucb", "cascade-linucb"};
    return names;
}

bool is_contextual(const std::string& name) {
    return name == "lints" || name == "glmts" || name == "newton-glmts" ||
           name == "cascade-linucb";
}

bool is_prior_informed(const std::string& name) {
    return name == "ts-beta" || name == "bayes-ucb";
}

PolicyPtr make_policy(const std::string& name, const PolicyParams& params, std::uint64_t seed) {
    ContextualOptions ctx = params.contextual;
    ctx.d = params.d;
    ctx.K = params.K;
    ctx.horizon = params.horizon;

    if (name == "gts") {
        GtsOptions o = params.gts;
        o.L = params.L;
        o.K = params.K;
        return std::make_unique<GaussianTsPolicy>(o, seed);
    }
    if (name == "ts-beta") {
        return ts_beta_policy(params.L, params.K, params.prior_alphas, params.prior_betas, seed);
    }
    if (name == "bayes-ucb") {
        return bayes_ucb_policy(params.L, params.K, params.prior_alphas, params.prior_betas);
    }
    if (name == "cascade-ucb1") return cascade_ucb1_policy(params.L, params.K);
    if (name == "cascade-klucb") return cascade_klucb_policy(params.L, params.K);
    if (name == "lints") return lints_policy(ctx, seed);
    if (name == "glmts") {
        GlmOptions o;
        static_cast<ContextualOptions&>(o) = ctx;
        o.link = params.link;
        o.irls = params.irls;
        o.refit_every = params.refit_every;
        o.project_to_ball = params.project_to_ball;
        return glmts_policy(o, seed);
    }
    if (name == "newton-glmts") {
        return std::make_unique<NewtonGlmTsPolicy>(
            NewtonOptions{params.d, params.K, params.newton_step_size, params.newton_sample_scale},
            seed);
    }
    if (name == "cascade-linucb") {
        LinUcbOptions o;
        static_cast<ContextualOptions&>(o) = ctx;
        o.confidence_scale = params.linucb_confidence_scale;
        return cascade_linucb_policy(o);
    }
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

}  // namespace cascade
