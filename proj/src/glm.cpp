#include "cascade/glm.hpp"

#include <cmath>
#include <cstring>
#include <limits>

namespace cascade {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double sigmoid_derivative(double z) {
    const double s = sigmoid(z);
    return s * (1.0 - s);
}

double kappa_min(double S) {
    if (S < 0.0) throw std::invalid_argument("parameter norm bound must be nonnegative");
    return sigmoid_derivative(S);
}

double LinkFunction::kappa(double S) const {
    return kind == LinkKind::sigmoid ? kappa_min(S) : 1.0;
}

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

std::string feature_key(const Vector& x) {
    std::string key(static_cast<std::size_t>(x.size()) * sizeof(double), '\0');
    std::memcpy(key.data(), x.data(), key.size());
    return key;
}

}  // namespace

void GlmDataset::add(const Vector& x, double label, double weight) {
    if (x.size() != dim_) throw std::invalid_argument("feature dimension mismatch");
    if (weight != 0.0 && weight != 1.0) {
        throw std::invalid_argument("examination weight must be 0 or 1");
    }
    if (weight == 0.0) return;
    auto [it, inserted] = lookup_.try_emplace(feature_key(x), counts_.size());
    if (inserted) {
        features_.push_back(x);
        counts_.push_back(0.0);
        label_sums_.push_back(0.0);
    }
    counts_[it->second] += 1.0;
    label_sums_[it->second] += label;
}

double GlmDataset::total_weight() const {
    double total = 0.0;
    for (auto c : counts_) total += c;
    return total;
}

double GlmDataset::objective(const Vector& theta, double lambda, const LinkFunction& link) const {
    double value = 0.5 * lambda * theta.squaredNorm();
    for (std::size_t r = 0; r < counts_.size(); ++r) {
        const double z = features_[r].dot(theta);
        if (link.kind == LinkKind::sigmoid) {
            value += counts_[r] * softplus(z) - label_sums_[r] * z;
        } else {
            value += 0.5 * counts_[r] * z * z - label_sums_[r] * z;
        }
    }
    return value;
}

Vector GlmDataset::score(const Vector& theta, double lambda, const LinkFunction& link) const {
    Vector g = lambda * theta;
    for (std::size_t r = 0; r < counts_.size(); ++r) {
        const double z = features_[r].dot(theta);
        g.noalias() += (counts_[r] * link(z) - label_sums_[r]) * features_[r];
    }
    return g;
}

namespace {

// Dense copy of the merged rows so the solver can use matrix products.
struct Design {
    Matrix X;
    Vector counts;
    Vector label_sums;

    explicit Design(const GlmDataset& data)
        : X(static_cast<Eigen::Index>(data.num_rows()), data.dim()),
          counts(static_cast<Eigen::Index>(data.num_rows())),
          label_sums(static_cast<Eigen::Index>(data.num_rows())) {
        for (std::size_t r = 0; r < data.num_rows(); ++r) {
            const auto i = static_cast<Eigen::Index>(r);
            X.row(i) = data.feature(r).transpose();
            counts[i] = data.count(r);
            label_sums[i] = data.label_sum(r);
        }
    }

    double objective(const Vector& theta, const Vector& z, double lambda,
                     const LinkFunction& link) const {
        double value = 0.5 * lambda * theta.squaredNorm();
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const double loss =
                link.kind == LinkKind::sigmoid ? softplus(z[i]) : 0.5 * z[i] * z[i];
            value += counts[i] * loss - label_sums[i] * z[i];
        }
        return value;
    }

    Vector score(const Vector& theta, const Vector& z, double lambda,
                 const LinkFunction& link) const {
        Vector residual(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            residual[i] = counts[i] * link(z[i]) - label_sums[i];
        }
        Vector g = lambda * theta;
        g.noalias() += X.transpose() * residual;
        return g;
    }
};

}  // namespace

IrlsResult irls_solve(const GlmDataset& data, double lambda, const IrlsOptions& options,
                      const Vector* warm_start, const LinkFunction& link) {
    const int d = data.dim();
    if (!(lambda > 0.0) && data.empty()) {
        throw std::invalid_argument("IRLS needs data or a positive ridge term");
    }
    if (lambda < 0.0) throw std::invalid_argument("negative ridge term");

    const Design design(data);
    IrlsResult result;
    result.theta = warm_start != nullptr && warm_start->size() == d ? *warm_start : Vector::Zero(d);

    Vector z = design.X * result.theta;
    Vector grad = design.score(result.theta, z, lambda, link);
    double obj = design.objective(result.theta, z, lambda, link);
    result.gradient_norm = grad.norm();

    const Eigen::Index n = design.X.rows();
    const bool row_space = lambda > 0.0 && n < d;
    const Matrix row_gram = row_space ? Matrix(design.X * design.X.transpose()) : Matrix();
    Matrix hessian = row_space ? Matrix() : Matrix(d, d);
    Vector root_w(n);
    while (result.gradient_norm > options.tol) {
        if (result.iterations >= options.max_iter) {
            throw IrlsError("IRLS did not converge: gradient norm " +
                                std::to_string(result.gradient_norm) + " after " +
                                std::to_string(result.iterations) + " iterations",
                            result.gradient_norm, result.iterations);
        }
        ++result.iterations;

        // Newton direction H⁻¹g with H = λI + BᵀB, B = diag(√w)X. With fewer
        // rows than features the Woodbury form solves an n×n system instead.
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            root_w[i] = std::sqrt(design.counts[i] * link.derivative(z[i]));
        }
        Vector step;
        if (row_space) {
            Matrix inner = root_w.asDiagonal() * row_gram * root_w.asDiagonal();
            inner.diagonal().array() += lambda;
            const Vector v = root_w.cwiseProduct(design.X * grad);
            const Vector u = Eigen::LLT<Matrix>(inner).solve(v);
            step = (grad - design.X.transpose() * root_w.cwiseProduct(u)) / lambda;
        } else {
            const Matrix weighted = root_w.asDiagonal() * design.X;
            hessian.setZero();
            hessian.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
            hessian.diagonal().array() += lambda;
            const Eigen::LLT<Matrix, Eigen::Lower> llt(hessian);
            step = llt.info() == Eigen::Success
                       ? Vector(llt.solve(grad))
                       : Vector(Eigen::LDLT<Matrix, Eigen::Lower>(hessian).solve(grad));
        }

        // Halve the step until the objective does not increase beyond
        // floating-point noise.
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(obj));
        double scale = 1.0;
        Vector candidate = result.theta - step;
        Vector candidate_z = design.X * candidate;
        double candidate_obj = design.objective(candidate, candidate_z, lambda, link);
        int halvings = 0;
        while (!(candidate_obj <= obj + slack) && halvings < 50) {
            scale *= 0.5;
            candidate = result.theta - scale * step;
            candidate_z = design.X * candidate;
            candidate_obj = design.objective(candidate, candidate_z, lambda, link);
            ++halvings;
        }
        if (!(candidate_obj <= obj + slack)) {
            // No descent possible at machine precision; keep the current iterate.
            result.gradient_norm = grad.norm();
            throw IrlsError("IRLS stalled: gradient norm " + std::to_string(result.gradient_norm),
                            result.gradient_norm, result.iterations);
        }
        result.theta = std::move(candidate);
        z = std::move(candidate_z);
        obj = candidate_obj;
        grad = design.score(result.theta, z, lambda, link);
        result.gradient_norm = grad.norm();
    }
    return result;
}

Vector project_to_ball(const Vector& theta, double S) {
    const double n = theta.norm();
    if (n > S && n > 0.0) return theta * (S / n);
    return theta;
}

}  // namespace cascade
