#pragma once

// Link functions and the penalized maximum-likelihood solver for the
// generalized linear click model.

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cascade/posterior.hpp"

namespace cascade {

double sigmoid(double z);
double sigmoid_derivative(double z);

enum class LinkKind { sigmoid, identity };

struct LinkFunction {
    LinkKind kind = LinkKind::sigmoid;

    double operator()(double z) const { return kind == LinkKind::sigmoid ? sigmoid(z) : z; }
    double derivative(double z) const {
        return kind == LinkKind::sigmoid ? sigmoid_derivative(z) : 1.0;
    }
    /// Lipschitz constant of the link.
    double lipschitz() const { return kind == LinkKind::sigmoid ? 0.25 : 1.0; }
    /// inf μ̇(z) over |z| ≤ S.
    double kappa(double S) const;
};

/// κ for the sigmoid link: μ̇(S), the infimum of μ̇ over |z| ≤ S.
double kappa_min(double S);

/// Examined observations for the logistic model. Rows with bit-identical
/// features are merged into one row carrying the observation count and the
/// label sum, which leaves the likelihood and its derivatives unchanged.
class GlmDataset {
public:
    explicit GlmDataset(int dim) : dim_(dim) {}

    /// Adds one observation with examination indicator `weight` ∈ {0, 1}.
    /// Weight-0 rows are not stored.
    void add(const Vector& x, double label, double weight = 1.0);

    int dim() const { return dim_; }
    std::size_t num_rows() const { return counts_.size(); }
    double total_weight() const;
    bool empty() const { return counts_.empty(); }

    const Vector& feature(std::size_t r) const { return features_[r]; }
    double count(std::size_t r) const { return counts_[r]; }
    double label_sum(std::size_t r) const { return label_sums_[r]; }

    /// Penalized negative log-likelihood whose gradient is `score`:
    /// λ/2‖θ‖² + Σ count·log(1+e^{xᵀθ}) − label_sum·xᵀθ for the sigmoid link,
    /// the squared-error analogue for the identity link.
    double objective(const Vector& theta, double lambda, const LinkFunction& link = {}) const;
    /// λθ + Σ (count·μ(xᵀθ) − label_sum)·x.
    Vector score(const Vector& theta, double lambda, const LinkFunction& link = {}) const;

private:
    int dim_;
    std::vector<Vector> features_;
    std::vector<double> counts_;
    std::vector<double> label_sums_;
    std::unordered_map<std::string, std::size_t> lookup_;
};

struct IrlsOptions {
    double tol = 1e-8;
    int max_iter = 100;
};

struct IrlsResult {
    Vector theta;
    int iterations = 0;
    double gradient_norm = 0.0;
};

class IrlsError : public std::runtime_error {
public:
    IrlsError(const std::string& what, double gradient_norm, int iterations)
        : std::runtime_error(what), gradient_norm_(gradient_norm), iterations_(iterations) {}
    double gradient_norm() const { return gradient_norm_; }
    int iterations() const { return iterations_; }

private:
    double gradient_norm_;
    int iterations_;
};

/// Newton/IRLS solve of λθ + Σ χ(μ(xᵀθ) − y)x = 0 with step halving on
/// objective increase. Throws IrlsError when the gradient norm does not reach
/// `options.tol` within `options.max_iter` iterations.
IrlsResult irls_solve(const GlmDataset& data, double lambda, const IrlsOptions& options = {},
                      const Vector* warm_start = nullptr, const LinkFunction& link = {});

/// Scales θ back onto the ball ‖θ‖ ≤ S when it lies outside.
Vector project_to_ball(const Vector& theta, double S);

}  // namespace cascade
