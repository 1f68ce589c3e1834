#include "cascade/envgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cascade/glm.hpp"

namespace cascade {

std::string to_string(InstanceKind kind) {
    switch (kind) {
        case InstanceKind::bernoulli: return "bernoulli";
        case InstanceKind::linear: return "linear";
        case InstanceKind::logistic: return "logistic";
    }
    return "unknown";
}

InstanceKind parse_instance_kind(const std::string& text) {
    if (text == "bernoulli") return InstanceKind::bernoulli;
    if (text == "linear") return InstanceKind::linear;
    if (text == "logistic") return InstanceKind::logistic;
    throw std::invalid_argument("unknown instance kind '" + text + "'");
}

void BanditInstance::validate() const {
    if (K == 0 || K > L) throw std::invalid_argument("instance needs 1 <= K <= L");
    if (means.size() != L) throw std::invalid_argument("instance means do not match L");
    for (auto m : means) {
        if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("instance mean outside [0,1]");
    }
    if (kind != InstanceKind::bernoulli) {
        if (d < 1) throw std::invalid_argument("contextual instance needs d >= 1");
        if (features.rows() != static_cast<Eigen::Index>(L) || features.cols() != d) {
            throw std::invalid_argument("feature matrix shape does not match (L, d)");
        }
        if (theta_star.size() != 0 && theta_star.size() != d) {
            throw std::invalid_argument("theta dimension does not match d");
        }
    }
    if (!prior.beta1.empty()) {
        if (prior.beta1.size() != L || prior.beta2.size() != L) {
            throw std::invalid_argument("prior length does not match L");
        }
        for (std::size_t i = 0; i < L; ++i) {
            if (!(prior.beta1[i] > 0.0) || !(prior.beta2[i] > 0.0)) {
                throw std::invalid_argument("Beta prior parameters must be positive");
            }
        }
    }
}

namespace {

double sample_beta(double a, double b, Rng& rng) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

}  // namespace

PriorSpec sample_beta_prior(std::size_t L, Rng& rng) {
    std::uniform_int_distribution<int> pick(1, 10);
    PriorSpec prior;
    prior.beta1.resize(L);
    prior.beta2.assign(L, 10.0);
    for (auto& b : prior.beta1) b = pick(rng);
    return prior;
}

BanditInstance sample_bernoulli_instance(const PriorSpec& prior, std::size_t K, Rng& rng) {
    BanditInstance inst;
    inst.kind = InstanceKind::bernoulli;
    inst.L = prior.beta1.size();
    inst.K = K;
    inst.prior = prior;
    inst.means.resize(inst.L);
    for (std::size_t i = 0; i < inst.L; ++i) {
        inst.means[i] = sample_beta(prior.beta1[i], prior.beta2[i], rng);
    }
    inst.validate();
    return inst;
}

std::vector<BanditInstance> sample_beta_instances(std::size_t L, std::size_t K, Rng& rng,
                                                  std::size_t n_outer, std::size_t n_inner) {
    std::vector<BanditInstance> out;
    out.reserve(n_outer * n_inner);
    for (std::size_t o = 0; o < n_outer; ++o) {
        const PriorSpec prior = sample_beta_prior(L, rng);
        for (std::size_t i = 0; i < n_inner; ++i) {
            out.push_back(sample_bernoulli_instance(prior, K, rng));
        }
    }
    return out;
}

PriorSpec misspecified_prior(int c, std::size_t L) {
    if (c < 0 || c > 8) throw std::invalid_argument("misspecification shift must lie in [0,8]");
    PriorSpec prior;
    prior.beta1.assign(L, 1.0 + c);
    prior.beta2.assign(L, 10.0 - c);
    prior.shift = c;
    return prior;
}

Vector sample_unit_nonnegative(int d, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector v(d);
    do {
        for (int j = 0; j < d; ++j) v[j] = unif(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

namespace {

BanditInstance sample_contextual(InstanceKind kind, std::size_t L, std::size_t K, int d,
                                 Rng& rng) {
    if (d < 1) throw std::invalid_argument("feature dimension must be >= 1");
    BanditInstance inst;
    inst.kind = kind;
    inst.L = L;
    inst.K = K;
    inst.d = d;
    inst.theta_star = sample_unit_nonnegative(d, rng);
    inst.features.resize(static_cast<Eigen::Index>(L), d);
    for (std::size_t i = 0; i < L; ++i) {
        inst.features.row(static_cast<Eigen::Index>(i)) = sample_unit_nonnegative(d, rng);
    }
    inst.means.resize(L);
    const Vector scores = inst.features * inst.theta_star;
    for (std::size_t i = 0; i < L; ++i) {
        const double z = scores[static_cast<Eigen::Index>(i)];
        inst.means[i] = kind == InstanceKind::logistic ? sigmoid(z) : std::clamp(z, 0.0, 1.0);
    }
    return inst;
}

}  // namespace

BanditInstance sample_linear_instance(std::size_t L, std::size_t K, int d, Rng& rng) {
    BanditInstance inst = sample_contextual(InstanceKind::linear, L, K, d, rng);
    inst.validate();
    return inst;
}

BanditInstance sample_logistic_instance(std::size_t L, std::size_t K, int d, Rng& rng) {
    BanditInstance inst = sample_contextual(InstanceKind::logistic, L, K, d, rng);
    inst.prior.beta1.resize(L);
    inst.prior.beta2.assign(L, 10.0);
    for (std::size_t i = 0; i < L; ++i) {
        const double mu = inst.means[i];
        if (!(mu < 1.0)) throw std::domain_error("attraction probability of 1 has no Beta prior");
        inst.prior.beta1[i] = 10.0 * mu / (1.0 - mu);
    }
    inst.validate();
    return inst;
}

Feedback env_step(const BanditInstance& instance, const RankedAction& action, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> draws(instance.L);
    for (auto& u : draws) u = unif(rng);
    std::vector<double> attraction(action.size());
    for (std::size_t j = 0; j < action.size(); ++j) {
        attraction[j] = draws[action[j]] < instance.means[action[j]] ? 1.0 : 0.0;
    }
    return cascade_feedback(attraction);
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const BanditInstance& instance) {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["kind"] = to_string(instance.kind);
    doc["L"] = instance.L;
    doc["K"] = instance.K;
    doc["d"] = instance.d;
    doc["means"] = instance.means;
    if (instance.theta_star.size() > 0) {
        doc["theta"] = std::vector<double>(instance.theta_star.data(),
                                           instance.theta_star.data() + instance.theta_star.size());
    } else {
        doc["theta"] = nullptr;
    }
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < instance.features.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(instance.features.cols()));
        for (Eigen::Index j = 0; j < instance.features.cols(); ++j) {
            row[static_cast<std::size_t>(j)] = instance.features(i, j);
        }
        rows.push_back(std::move(row));
    }
    doc["features"] = std::move(rows);
    doc["prior"] = {{"beta1", instance.prior.beta1},
                    {"beta2", instance.prior.beta2},
                    {"shift", instance.prior.shift}};
    doc["source"] = instance.source;
    return doc;
}

BanditInstance instance_from_json(const nlohmann::json& doc) {
    if (doc.value("version", 0) != 1) throw std::invalid_argument("unsupported instance version");
    BanditInstance inst;
    inst.kind = parse_instance_kind(doc.at("kind").get<std::string>());
    inst.L = doc.at("L").get<std::size_t>();
    inst.K = doc.at("K").get<std::size_t>();
    inst.d = doc.at("d").get<int>();
    inst.means = doc.at("means").get<std::vector<double>>();
    if (doc.contains("theta") && !doc["theta"].is_null()) {
        const auto theta = doc["theta"].get<std::vector<double>>();
        inst.theta_star = Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    }
    const auto& rows = doc.at("features");
    if (!rows.empty()) {
        inst.features.resize(static_cast<Eigen::Index>(rows.size()), inst.d);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto row = rows[i].get<std::vector<double>>();
            if (row.size() != static_cast<std::size_t>(inst.d)) {
                throw std::invalid_argument("feature row length does not match d");
            }
            for (int j = 0; j < inst.d; ++j) {
                inst.features(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
            }
        }
    }
    if (doc.contains("prior")) {
        const auto& p = doc["prior"];
        inst.prior.beta1 = p.value("beta1", std::vector<double>{});
        inst.prior.beta2 = p.value("beta2", std::vector<double>{});
        inst.prior.shift = p.value("shift", 0);
    }
    inst.source = doc.value("source", std::string{});
    inst.validate();
    return inst;
}

void save_instance(const BanditInstance& instance, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json(instance).dump() << '\n';
}

BanditInstance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return instance_from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------

Environment::Environment(BanditInstance instance, EnvironmentOptions options, std::uint64_t seed)
    : instance_(std::move(instance)), options_(options), rng_(seed) {
    instance_.validate();
    if (options_.redraw_features &&
        (instance_.kind == InstanceKind::bernoulli || instance_.theta_star.size() == 0)) {
        throw std::invalid_argument("feature redraw needs a contextual instance with theta");
    }
    if (options_.linear_feedback == LinearFeedbackMode::gaussian &&
        (instance_.kind != InstanceKind::linear || instance_.theta_star.size() == 0)) {
        throw std::invalid_argument("gaussian feedback needs a linear instance with theta");
    }
    features_ = instance_.features;
    draws_.resize(instance_.L);
    refresh_means();
}

void Environment::refresh_means() {
    if (options_.linear_feedback == LinearFeedbackMode::gaussian) {
        const Vector scores = features_ * instance_.theta_star;
        means_.assign(scores.data(), scores.data() + scores.size());
        best_value_ = 0.0;
        for (auto i : top_k(means_, instance_.K)) best_value_ += means_[i];
        return;
    }
    if (options_.redraw_features) {
        const Vector scores = features_ * instance_.theta_star;
        means_.resize(instance_.L);
        for (std::size_t i = 0; i < instance_.L; ++i) {
            const double z = scores[static_cast<Eigen::Index>(i)];
            means_[i] = instance_.kind == InstanceKind::logistic ? sigmoid(z)
                                                                 : std::clamp(z, 0.0, 1.0);
        }
    } else {
        means_ = instance_.means;
    }
    best_value_ = expected_cascade_reward(means_, cascade::best_action(means_, instance_.K));
}

void Environment::begin_round() {
    if (options_.redraw_features) {
        for (std::size_t i = 0; i < instance_.L; ++i) {
            features_.row(static_cast<Eigen::Index>(i)) = sample_unit_nonnegative(instance_.d, rng_);
        }
        refresh_means();
    }
    if (options_.linear_feedback == LinearFeedbackMode::gaussian) {
        std::normal_distribution<double> noise(0.0, options_.noise_sd);
        for (auto& v : draws_) v = noise(rng_);
    } else {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (auto& u : draws_) u = unif(rng_);
    }
}

Context Environment::context() const {
    Context ctx;
    ctx.num_items = instance_.L;
    ctx.features = instance_.kind == InstanceKind::bernoulli ? nullptr : &features_;
    return ctx;
}

Feedback Environment::step(const RankedAction& action) const {
    std::vector<double> values(action.size());
    if (options_.linear_feedback == LinearFeedbackMode::gaussian) {
        for (std::size_t j = 0; j < action.size(); ++j) {
            values[j] = means_[action[j]] + draws_[action[j]];
        }
        return threshold_feedback(values, options_.threshold);
    }
    for (std::size_t j = 0; j < action.size(); ++j) {
        values[j] = draws_[action[j]] < means_[action[j]] ? 1.0 : 0.0;
    }
    return cascade_feedback(values);
}

double Environment::regret(const RankedAction& action) const {
    if (options_.linear_feedback == LinearFeedbackMode::gaussian) {
        double played = 0.0;
        for (auto i : action) played += means_[i];
        return std::max(0.0, best_value_ - played);
    }
    return std::max(0.0, best_value_ - expected_cascade_reward(means_, action));
}

RankedAction Environment::best_action() const {
    return cascade::best_action(means_, instance_.K);
}

}  // namespace cascade
