#include "cascade/posterior.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace cascade {

GaussianItemPosterior::GaussianItemPosterior(std::size_t num_items, double prior_mean,
                                             double prior_var, double noise_var)
    : prior_mean_(prior_mean),
      prior_var_(prior_var),
      noise_var_(noise_var),
      counts_(num_items, 0),
      sums_(num_items, 0.0) {
    if (!(prior_var > 0.0) || !(noise_var > 0.0)) {
        throw std::invalid_argument("Gaussian posterior needs positive prior and noise variance");
    }
}

void GaussianItemPosterior::observe(std::size_t item, double value) {
    counts_.at(item) += 1;
    sums_[item] += value;
}

void GaussianItemPosterior::set_statistics(std::size_t item, long count, double sum) {
    if (count < 0) throw std::invalid_argument("negative observation count");
    counts_.at(item) = count;
    sums_[item] = sum;
}

double GaussianItemPosterior::variance(std::size_t item) const {
    return 1.0 / (1.0 / prior_var_ + static_cast<double>(counts_[item]) / noise_var_);
}

double GaussianItemPosterior::mean(std::size_t item) const {
    return (sums_[item] / noise_var_ + prior_mean_ / prior_var_) * variance(item);
}

double GaussianItemPosterior::sample(std::size_t item, Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    return mean(item) + std::sqrt(variance(item)) * normal(rng);
}

BetaItemPosterior::BetaItemPosterior(std::vector<double> alphas, std::vector<double> betas)
    : alphas_(std::move(alphas)), betas_(std::move(betas)) {
    if (alphas_.size() != betas_.size()) {
        throw std::invalid_argument("alpha and beta vectors differ in length");
    }
    for (std::size_t i = 0; i < alphas_.size(); ++i) {
        if (!(alphas_[i] > 0.0) || !(betas_[i] > 0.0)) {
            throw std::invalid_argument("Beta prior parameters must be positive");
        }
    }
}

void BetaItemPosterior::observe(std::size_t item, bool clicked) {
    if (clicked) {
        alphas_.at(item) += 1.0;
    } else {
        betas_.at(item) += 1.0;
    }
}

double BetaItemPosterior::mean(std::size_t item) const {
    return alphas_[item] / (alphas_[item] + betas_[item]);
}

double BetaItemPosterior::sample(std::size_t item, Rng& rng) const {
    std::gamma_distribution<double> ga(alphas_[item], 1.0);
    std::gamma_distribution<double> gb(betas_[item], 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

double BetaItemPosterior::quantile(std::size_t item, double q, double guess) const {
    return beta_quantile(alphas_[item], betas_[item], q, guess);
}

double beta_cdf(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return boost::math::ibeta(a, b, x);
}

double beta_quantile(double a, double b, double q, double guess) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("Beta parameters must be positive");
    constexpr double tol = 1e-10;
    double lo = 0.0;
    double hi = 1.0;
    double x = guess > 0.0 && guess < 1.0 ? guess : a / (a + b);
    // Newton steps on the CDF, falling back to bisection whenever a step
    // leaves the current bracket.
    for (int iter = 0; iter < 200 && hi - lo > tol; ++iter) {
        const double f = beta_cdf(a, b, x) - q;
        if (f == 0.0) return x;
        if (f < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        const double pdf = boost::math::ibeta_derivative(a, b, x);
        double next = pdf > 0.0 && std::isfinite(pdf) ? x - f / pdf : -1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) < 0.25 * tol) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

void RadiusParams::validate() const {
    if (!(sigma_sq > 0.0) || !(lambda > 0.0) || !(S > 0.0) || d < 1) {
        throw std::invalid_argument("radius parameters must be strictly positive");
    }
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
}

double radius_beta_t(const RadiusParams& params, long t) {
    params.validate();
    if (t < 0) throw std::invalid_argument("negative round index");
    const double half_d = 0.5 * params.d;
    // log((λ+t)^{d/2} λ^{-d/2} / δ)
    const double log_term =
        half_d * std::log1p(static_cast<double>(t) / params.lambda) - std::log(params.delta);
    const double noise = params.square_sigma ? params.sigma_sq : std::sqrt(params.sigma_sq);
    return noise * std::sqrt(2.0 * log_term) + std::sqrt(params.lambda) * params.S;
}

double delta_schedule(double delta, long t) {
    if (t < 1) throw std::invalid_argument("round index must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
    // ⌈log₂ t⌉ computed exactly on integers.
    int ceil_log2 = 0;
    while ((1L << ceil_log2) < t) ++ceil_log2;
    return std::ldexp(delta, -std::max(1, ceil_log2));
}

EllipsoidState::EllipsoidState(int dim, double lambda)
    : dim_(dim),
      lambda_(lambda),
      gram_(Matrix::Identity(dim, dim) * lambda),
      gram_inv_(Matrix::Identity(dim, dim) / lambda),
      b_(Vector::Zero(dim)),
      theta_hat_(Vector::Zero(dim)) {
    if (dim < 1) throw std::invalid_argument("ellipsoid dimension must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    gram_chol_.compute(gram_);
}

void EllipsoidState::rank_one_update(const Vector& x, double weight, double y) {
    if (x.size() != dim_) throw std::invalid_argument("feature dimension mismatch");
    if (!(weight >= 0.0)) throw std::invalid_argument("negative update weight");
    if (y != 0.0) {
        b_.noalias() += y * x;
    }
    if (weight > 0.0) {
        gram_.noalias() += weight * x * x.transpose();
        const Vector vx = gram_inv_ * x;
        const double denom = 1.0 + weight * x.dot(vx);
        gram_inv_.noalias() -= (weight / denom) * vx * vx.transpose();
        gram_chol_.rankUpdate(x, weight);
        ++updates_;
        if (updates_ % kRefreshInterval == 0) {
            refresh_inverse();
        }
    }
    if (weight > 0.0 || y != 0.0) {
        theta_hat_.noalias() = gram_inv_ * b_;
    }
}

void EllipsoidState::refresh_inverse() {
    Eigen::LDLT<Matrix> ldlt(gram_);
    gram_inv_ = ldlt.solve(Matrix::Identity(dim_, dim_));
    gram_inv_ = 0.5 * (gram_inv_ + gram_inv_.transpose()).eval();
    gram_chol_.compute(gram_);
}

Vector EllipsoidState::sample(const Vector& mean, double scale, Rng& rng) const {
    if (!(scale >= 0.0)) throw std::invalid_argument("negative sampling scale");
    if (mean.size() != dim_) throw std::invalid_argument("mean dimension mismatch");
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(dim_);
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    // V = LLᵀ, so L⁻ᵀz has covariance V⁻¹.
    gram_chol_.matrixU().solveInPlace(z);
    return mean + scale * z;
}

Matrix covariance_factor(const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::LLT<Matrix> jittered(cov + 1e-10 * Matrix::Identity(cov.rows(), cov.cols()));
    if (jittered.info() != Eigen::Success) {
        throw std::runtime_error("covariance is not positive definite");
    }
    return jittered.matrixL();
}

Vector mvn_sample_factor(const Vector& mean, double scale, const Matrix& lower, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    const Vector correlated = lower.triangularView<Eigen::Lower>() * z;
    return mean + scale * correlated;
}

Vector mvn_sample(const Vector& mean, double scale, const Matrix& cov, Rng& rng) {
    if (!(scale >= 0.0)) throw std::invalid_argument("negative sampling scale");
    if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
        throw std::invalid_argument("covariance shape mismatch");
    }
    return mvn_sample_factor(mean, scale, covariance_factor(cov), rng);
}

}  // namespace cascade
