#pragma once

// Conjugate item posteriors and the Gram-matrix state used by the
// contextual policies.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cascade/rng.hpp"

namespace cascade {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Independent Gaussian posterior per item under a Gaussian likelihood with
/// known noise variance.
class GaussianItemPosterior {
public:
    GaussianItemPosterior(std::size_t num_items, double prior_mean = 0.0, double prior_var = 1.0,
                          double noise_var = 1.0);

    void observe(std::size_t item, double value);

    double mean(std::size_t item) const;
    double variance(std::size_t item) const;
    double sample(std::size_t item, Rng& rng) const;

    std::size_t num_items() const { return counts_.size(); }
    long count(std::size_t item) const { return counts_[item]; }
    double sum(std::size_t item) const { return sums_[item]; }
    double prior_mean() const { return prior_mean_; }
    double prior_var() const { return prior_var_; }
    double noise_var() const { return noise_var_; }

    /// Overwrites the sufficient statistics of one item (used by tests and
    /// replay tools).
    void set_statistics(std::size_t item, long count, double sum);

private:
    double prior_mean_;
    double prior_var_;
    double noise_var_;
    std::vector<long> counts_;
    std::vector<double> sums_;
};

/// Beta-Bernoulli posterior per item.
class BetaItemPosterior {
public:
    BetaItemPosterior(std::vector<double> alphas, std::vector<double> betas);

    void observe(std::size_t item, bool clicked);

    double alpha(std::size_t item) const { return alphas_[item]; }
    double beta(std::size_t item) const { return betas_[item]; }
    double mean(std::size_t item) const;
    double sample(std::size_t item, Rng& rng) const;
    /// q-quantile of Beta(alpha, beta); q must lie in (0, 1).
    double quantile(std::size_t item, double q, double guess = -1.0) const;

    std::size_t num_items() const { return alphas_.size(); }

private:
    std::vector<double> alphas_;
    std::vector<double> betas_;
};

/// CDF of Beta(a, b) at x (regularized incomplete beta).
double beta_cdf(double a, double b, double x);

/// q-quantile of Beta(a, b), found by bracketed root finding on the CDF to an
/// absolute tolerance of 1e-10. `guess` (in (0,1)) seeds the search; the
/// posterior mean is used otherwise.
double beta_quantile(double a, double b, double q, double guess = -1.0);

/// Parameters of the confidence radius used by the contextual policies.
struct RadiusParams {
    double sigma_sq = 1.0;
    double lambda = 1.0;
    double S = 1.0;
    int d = 1;
    double delta = 0.1;
    /// Leading noise factor: σ² when true, σ = √sigma_sq otherwise.
    bool square_sigma = true;

    void validate() const;
};

/// σ²·√(2 log((λ+t)^{d/2} λ^{-d/2} / δ)) + √λ·S, evaluated with `params.delta`.
double radius_beta_t(const RadiusParams& params, long t);

/// δ / 2^{max(1, ⌈log₂ t⌉)}.
double delta_schedule(double delta, long t);

/// Regularized Gram matrix V = λI + Σ w·x·xᵀ together with its inverse, the
/// response vector b = Σ y·x and the least-squares estimate V⁻¹b.
class EllipsoidState {
public:
    EllipsoidState(int dim, double lambda);

    /// V += weight·x·xᵀ, b += y·x. The inverse is updated with the
    /// Sherman–Morrison identity and periodically rebuilt from V.
    void rank_one_update(const Vector& x, double weight, double y = 0.0);

    int dim() const { return dim_; }
    double lambda() const { return lambda_; }
    const Matrix& gram() const { return gram_; }
    const Matrix& gram_inv() const { return gram_inv_; }
    const Vector& b() const { return b_; }
    const Vector& theta_hat() const { return theta_hat_; }
    long num_updates() const { return updates_; }

    /// ‖x‖²_{V⁻¹}.
    double weighted_norm_sq(const Vector& x) const { return x.dot(gram_inv_ * x); }

    /// Rebuild the inverse and the Cholesky factor from V directly.
    void refresh_inverse();

    /// Draws from N(mean, scale²·V⁻¹) through the Cholesky factor of V, which
    /// is kept current with O(d²) rank-one updates.
    Vector sample(const Vector& mean, double scale, Rng& rng) const;

    static constexpr long kRefreshInterval = 256;

private:
    int dim_;
    double lambda_;
    Matrix gram_;
    Matrix gram_inv_;
    Vector b_;
    Vector theta_hat_;
    Eigen::LLT<Matrix> gram_chol_;
    long updates_ = 0;
};

/// Draws from N(mean, scale²·cov) using a Cholesky factor of `cov`. When the
/// factorization fails, retries once with 1e-10·I added, then throws
/// std::runtime_error.
Vector mvn_sample(const Vector& mean, double scale, const Matrix& cov, Rng& rng);

/// Same, with a precomputed lower Cholesky factor of the covariance.
Vector mvn_sample_factor(const Vector& mean, double scale, const Matrix& lower, Rng& rng);

/// Lower Cholesky factor with the jitter fallback described for mvn_sample.
Matrix covariance_factor(const Matrix& cov);

}  // namespace cascade
