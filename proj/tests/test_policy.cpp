#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "cascade/policy.hpp"
#include "oracles.hpp"

using namespace cascade;

namespace {

Feedback no_click(std::vector<double> values) {
    Feedback fb;
    fb.click_position = static_cast<int>(values.size());
    fb.examined.assign(values.size(), true);
    fb.values = std::move(values);
    return fb;
}

Feedback click_at(std::size_t K, int position) {
    std::vector<double> v(K, 0.0);
    v[static_cast<std::size_t>(position - 1)] = 1.0;
    return cascade_feedback(v);
}

Matrix random_features(Rng& rng, std::size_t L, int d) {
    std::normal_distribution<double> normal;
    Matrix X(static_cast<Eigen::Index>(L), d);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (int j = 0; j < d; ++j) X(i, j) = normal(rng);
        X.row(i) /= X.row(i).norm();
    }
    return X;
}

PolicyParams two_item_params(const std::string& name) {
    PolicyParams p;
    p.L = 2;
    p.K = 1;
    p.d = 2;
    p.horizon = 5000;
    p.prior_alphas = {1.0, 1.0};
    p.prior_betas = {1.0, 1.0};
    p.contextual.sigma_sq = 0.25;
    (void)name;
    return p;
}

}  // namespace

TEST_CASE("registry") {
    CHECK(algorithm_names() ==
          std::vector<std::string>{"gts", "lints", "glmts", "newton-glmts", "ts-beta", "bayes-ucb",
                                   "cascade-ucb1", "cascade-klucb", "cascade-linucb"});
    CHECK(is_contextual("glmts"));
    CHECK_FALSE(is_contextual("gts"));
    CHECK(is_prior_informed("bayes-ucb"));
    CHECK_FALSE(is_prior_informed("gts"));
    CHECK_THROWS_AS(make_policy("nope", two_item_params("nope"), 1), std::invalid_argument);
}

TEST_CASE("gts selects uniformly at round one") {
    const std::size_t L = 10;
    GaussianTsPolicy policy({L, 1, 0.0, 1.0, 1.0}, 99);
    std::vector<int> counts(L, 0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) counts[policy.select({L, nullptr})[0]] += 1;
    double chi2 = 0.0;
    const double expected = static_cast<double>(n) / L;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const boost::math::chi_squared dist(L - 1);
    CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.001);
}

TEST_CASE("gts concentrates on a well-observed good item") {
    GaussianTsPolicy policy({5, 3, 0.0, 1.0, 1.0}, 7);
    policy.posterior().set_statistics(0, 1000000, 900000.0);
    int hits = 0;
    for (int i = 0; i < 1000; ++i) {
        const RankedAction a = policy.select({5, nullptr});
        hits += std::find(a.begin(), a.end(), 0) != a.end();
    }
    CHECK(hits >= 800);
}

TEST_CASE("gts update reads examined positions only") {
    GaussianTsPolicy policy({4, 3, 0.0, 1.0, 1.0}, 1);
    const RankedAction a({2, 0, 3}, 4);
    policy.update(a, click_at(3, 2), {4, nullptr});
    CHECK(policy.posterior().count(2) == 1);
    CHECK(policy.posterior().count(0) == 1);
    CHECK(policy.posterior().count(3) == 0);
    CHECK(policy.posterior().sum(0) == 1.0);
}

TEST_CASE("lints") {
    Rng rng(3);
    ContextualOptions o;
    o.d = 3;
    o.K = 2;
    o.sigma_sq = 0.25;
    LinearTsPolicy policy(o, 5);
    CHECK(policy.ellipsoid().theta_hat().norm() == 0.0);

    Vector theta(3);
    theta << 0.6, 0.0, 0.8;
    for (int t = 0; t < 500; ++t) {
        const Matrix X = random_features(rng, 6, 3);
        const Context ctx{6, &X};
        const RankedAction a = policy.select(ctx);
        CHECK(a.size() == 2);
        const Vector y = X * theta;
        policy.update(a, no_click({y[static_cast<Eigen::Index>(a[0])], y[static_cast<Eigen::Index>(a[1])]}),
                      ctx);
    }
    CHECK((policy.ellipsoid().theta_hat() - theta).norm() <= 0.05);
    CHECK_THROWS(policy.select({6, nullptr}));

    SUBCASE("zero radius is greedy") {
        ContextualOptions g = o;
        g.sample_scale = 0.0;
        LinearTsPolicy greedy(g, 5);
        const Matrix X = random_features(rng, 6, 3);
        const Context ctx{6, &X};
        greedy.update(RankedAction({0, 1}, 6), no_click({0.9, 0.1}), ctx);
        const Vector scores = X * greedy.ellipsoid().theta_hat();
        const auto expected = top_k(std::span<const double>(scores.data(), 6), 2);
        CHECK(greedy.select(ctx).items() == expected);
    }
}

TEST_CASE("glmts initial covariance") {
    GlmOptions o;
    o.d = 3;
    o.K = 2;
    o.lambda = 0.5;
    GlmTsPolicy policy(o, 1);
    CHECK(policy.theta_hat().norm() == 0.0);
    const double beta = o.radius(1);
    const double kappa = kappa_min(1.0);
    CHECK(policy.sampling_covariance(1).isApprox(
        (beta * beta / 0.5 / (kappa * kappa)) * Matrix::Identity(3, 3)));
}

TEST_CASE("glmts estimate converges on a logistic environment") {
    Rng rng(11);
    Rng env_rng(12);
    GlmOptions o;
    o.d = 3;
    o.K = 3;
    o.sigma_sq = 0.25;
    o.horizon = 2000;
    o.lambda = 1.0;
    GlmTsPolicy policy(o, 13);
    Vector theta(3);
    theta << 0.5, -0.6, 0.4;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double early_error = 0.0;
    for (int t = 1; t <= 2000; ++t) {
        const Matrix X = random_features(rng, 8, 3);
        const Context ctx{8, &X};
        const RankedAction a = policy.select(ctx);
        std::vector<double> draws;
        for (auto i : a) draws.push_back(u(env_rng) < sigmoid(X.row(static_cast<Eigen::Index>(i)).dot(theta)) ? 1.0 : 0.0);
        policy.update(a, cascade_feedback(draws), ctx);
        if (t == 200) {
            policy.refit();
            early_error = (policy.theta_hat() - theta).norm();
        }
    }
    policy.refit();
    const double final_error = (policy.theta_hat() - theta).norm();
    CHECK(final_error < early_error);
    CHECK(final_error <= 0.2);
}

TEST_CASE("glmts Laplace sample covariance") {
    Rng rng(15);
    GlmOptions o;
    o.d = 3;
    o.K = 2;
    o.lambda = 1.0;
    GlmTsPolicy policy(o, 16);
    for (int t = 0; t < 30; ++t) {
        const Matrix X = random_features(rng, 4, 3);
        const Context ctx{4, &X};
        const RankedAction a = policy.select(ctx);
        policy.update(a, click_at(2, 1 + t % 2), ctx);
    }
    policy.refit();
    const long t = 31;
    std::vector<Vector> draws;
    for (int i = 0; i < 100000; ++i) draws.push_back(policy.sample_parameter(t) - policy.theta_hat());
    CHECK(oracle::max_relative_entry_error(oracle::sample_covariance(draws),
                                           policy.sampling_covariance(t)) < 0.05);
}

TEST_CASE("newton glmts") {
    SUBCASE("first update by hand") {
        const double alpha = 0.7;
        NewtonGlmTsPolicy policy({3, 3, alpha, 1.0}, 1);
        Matrix X = Matrix::Identity(3, 3);
        const Context ctx{3, &X};
        policy.update(RankedAction({0, 1, 2}, 3), click_at(3, 1), ctx);
        CHECK(policy.ellipsoid().gram().isApprox(
            Vector(Eigen::Vector3d(4, 3, 3)).asDiagonal().toDenseMatrix()));
        CHECK(policy.theta_hat()[0] == doctest::Approx(0.125 * alpha));
        CHECK(policy.theta_hat()[1] == 0.0);
        CHECK(policy.counter() == 2);
        CHECK(policy.last_update_steps() == 1);
    }
    SUBCASE("no click processes every position") {
        NewtonGlmTsPolicy policy({3, 3, 1.0, 1.0}, 1);
        Matrix X = Matrix::Identity(3, 3);
        policy.update(RankedAction({0, 1, 2}, 3), no_click({0, 0, 0}), {3, &X});
        CHECK(policy.last_update_steps() == 3);
        CHECK(policy.counter() == 4);
    }
    SUBCASE("alternating labels stay bounded") {
        NewtonGlmTsPolicy policy({2, 1, 1.0, 1.0}, 1);
        Matrix X(2, 2);
        X << 1.0, 0.0, 0.0, 1.0;
        const Context ctx{2, &X};
        for (int t = 0; t < 100000; ++t) {
            policy.update(RankedAction({0}, 2), t % 2 ? click_at(1, 1) : no_click({0.0}), ctx);
        }
        CHECK(std::isfinite(policy.theta_hat().norm()));
        CHECK(policy.theta_hat().norm() <= 100000.0);
    }
}

TEST_CASE("ts-beta") {
    BetaTsPolicy strong({2, 1, {1000.0, 1.0}, {1.0, 1000.0}}, 3);
    int first = 0;
    for (int i = 0; i < 10000; ++i) first += strong.select({2, nullptr})[0] == 0;
    CHECK(first >= 9990);

    BetaTsPolicy flat({4, 1, {1, 1, 1, 1}, {1, 1, 1, 1}}, 4);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 8000; ++i) counts[flat.select({4, nullptr})[0]] += 1;
    for (int c : counts) CHECK(std::abs(c - 2000) < 200);

    BetaTsPolicy replay({3, 2, {1, 1, 1}, {1, 1, 1}}, 5);
    replay.update(RankedAction({0, 1}, 3), click_at(2, 2), {3, nullptr});
    replay.update(RankedAction({1, 2}, 3), no_click({0, 0}), {3, nullptr});
    replay.update(RankedAction({2, 0}, 3), click_at(2, 1), {3, nullptr});
    CHECK(replay.posterior().alpha(0) == 1.0);
    CHECK(replay.posterior().beta(0) == 2.0);
    CHECK(replay.posterior().alpha(1) == 2.0);
    CHECK(replay.posterior().beta(1) == 2.0);
    CHECK(replay.posterior().alpha(2) == 2.0);
    CHECK(replay.posterior().beta(2) == 2.0);
}

TEST_CASE("bayes-ucb") {
    BayesUcbPolicy same({4, 2, {2, 2, 2, 2}, {3, 3, 3, 3}});
    CHECK(same.select({4, nullptr}).items() == std::vector<ItemIndex>{0, 1});

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.5, 20.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double a = u(rng), b = u(rng);
        BayesUcbPolicy p({2, 1, {a, a + u(rng)}, {b, b}});
        const long t = 2 + rep * 10;
        CHECK(p.index(1, t) >= p.index(0, t) - 1e-10);
    }
    BayesUcbPolicy limit({1, 1, {3.0}, {7.0}});
    CHECK(limit.index(0, 1) == doctest::Approx(beta_quantile(3, 7, 0.5)));
    // the quantile level 1 − 1/t drives the index towards 1
    CHECK(limit.index(0, 1000000000L) ==
          doctest::Approx(oracle::beta_quantile_by_bisection(3, 7, 1.0 - 1e-9)).epsilon(1e-9));
    CHECK(1.0 - limit.index(0, 1000000000L) < 0.1 * (1.0 - limit.index(0, 10)));
    CHECK(limit.index(0, 100) < limit.index(0, 10000));
}

TEST_CASE("ucb1 index") {
    CHECK(std::isinf(ucb1_index(0.0, 0, 10)));
    CHECK(ucb1_index(0.5, 100, 1000) == doctest::Approx(0.8219).epsilon(1e-4));
    CHECK(ucb1_index(0.5, 100, 1000) ==
          doctest::Approx(0.5 + std::sqrt(1.5 * std::log(1000.0) / 100.0)));
    double last = INFINITY;
    for (long n = 1; n < 1000; n *= 2) {
        const double idx = ucb1_index(0.3, n, 500);
        CHECK(idx < last);
        CHECK(idx > 0.3);
        last = idx;
    }

    CascadeUcb1Policy policy(5, 2);
    policy.update(RankedAction({0, 1}, 5), no_click({0, 0}), {5, nullptr});
    const RankedAction a = policy.select({5, nullptr});
    for (auto i : a) CHECK(i >= 2);
}

TEST_CASE("kl-ucb index") {
    CHECK(klucb_index(1.0, 10, 100) == 1.0);
    const double q = klucb_index(0.5, 10, 100);
    const double budget = std::log(100.0) + 3.0 * std::log(std::log(100.0));
    CHECK(10 * bernoulli_kl(0.5, q) <= budget + 1e-9);
    CHECK(10 * bernoulli_kl(0.5, q + 1e-9) > budget - 1e-9);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double m = u(rng);
        CHECK(klucb_index(m, 1 + i, 2 + 5 * i) >= m);
    }
    CascadeKlUcbPolicy policy(4, 1);
    policy.update(RankedAction({0}, 4), click_at(1, 1), {4, nullptr});
    CHECK(policy.select({4, nullptr})[0] == 1);
}

TEST_CASE("cascade linucb") {
    LinUcbOptions o;
    o.d = 2;
    o.K = 2;
    o.lambda = 0.25;
    o.confidence_scale = 1.0;
    CascadeLinUcbPolicy fresh(o);
    Matrix X(3, 2);
    X << 0.2, 0.0, 0.0, 0.9, 0.5, 0.5;
    const auto idx = fresh.indices(X);
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(idx[static_cast<std::size_t>(i)] == doctest::Approx(X.row(i).norm() / 0.5));
    }
    CHECK(fresh.select({3, &X}).items() == std::vector<ItemIndex>{1, 2});

    LinUcbOptions g = o;
    g.confidence_scale = 0.0;
    CascadeLinUcbPolicy greedy(g);
    greedy.update(RankedAction({0, 1}, 3), no_click({1.0, 0.0}), {3, &X});
    const Vector scores = X * greedy.ellipsoid().theta_hat();
    CHECK(greedy.select({3, &X}).items() ==
          top_k(std::span<const double>(scores.data(), 3), 2));

    CascadeLinUcbPolicy p(o);
    p.update(RankedAction({2, 0}, 3), click_at(2, 1), {3, &X});
    const Vector means = X * p.ellipsoid().theta_hat();
    const auto ucb = p.indices(X);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(ucb[static_cast<std::size_t>(i)] >= means[i]);
}

TEST_CASE("policy invariants") {
    Rng rng(30);
    const std::size_t L = 6, K = 3;
    const int d = 3;
    PolicyParams params;
    params.L = L;
    params.K = K;
    params.d = d;
    params.horizon = 200;
    params.prior_alphas.assign(L, 1.0);
    params.prior_betas.assign(L, 2.0);
    params.contextual.lambda = 1.0;
    const Matrix X = random_features(rng, L, d);
    const Context ctx{L, &X};

    for (const auto& name : algorithm_names()) {
        CAPTURE(name);
        auto a = make_policy(name, params, 42);
        auto b = make_policy(name, params, 42);
        auto c = make_policy(name, params, 42);
        std::uniform_int_distribution<int> click(1, static_cast<int>(K) + 1);
        for (int t = 0; t < 60; ++t) {
            const RankedAction ra = a->select(ctx);
            const RankedAction rb = b->select(ctx);
            const RankedAction rc = c->select(ctx);
            REQUIRE(ra.size() == K);
            CHECK(std::set<ItemIndex>(ra.begin(), ra.end()).size() == K);
            // same seed, same history: same choices
            CHECK(ra == rb);
            CHECK(ra == rc);
            const int pos = click(rng);
            const Feedback clean = pos <= static_cast<int>(K) ? click_at(K, pos) : no_click({0, 0, 0});
            Feedback noisy = clean;
            for (std::size_t j = static_cast<std::size_t>(clean.click_position); j < K; ++j) {
                noisy.values[j] = 0.77;
            }
            a->update(ra, clean, ctx);
            b->update(rb, noisy, ctx);
            c->update(rc, clean, ctx);
        }
        // reset restores the initial state and stream
        auto fresh = make_policy(name, params, 42);
        a->reset();
        for (int t = 0; t < 5; ++t) CHECK(a->select(ctx) == fresh->select(ctx));
    }
}

TEST_CASE("every policy has sublinear regret on a two-item problem") {
    const std::vector<double> means = {0.9, 0.1};
    Matrix X = Matrix::Identity(2, 2);
    const Context ctx{2, &X};
    const long T = 5000;
    for (const auto& name : algorithm_names()) {
        CAPTURE(name);
        double first_half = 0.0, second_half = 0.0;
        for (int seed = 0; seed < 20; ++seed) {
            auto policy = make_policy(name, two_item_params(name), 1000 + seed);
            Rng env(static_cast<std::uint64_t>(seed));
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (long t = 1; t <= T; ++t) {
                const RankedAction a = policy->select(ctx);
                const double regret = means[0] - means[a[0]];
                (t <= T / 2 ? first_half : second_half) += regret;
                const double draw = u(env) < means[a[0]] ? 1.0 : 0.0;
                policy->update(a, cascade_feedback(std::vector<double>{draw}), ctx);
            }
        }
        CHECK(second_half < first_half);
    }
}
