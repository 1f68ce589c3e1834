#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <boost/math/special_functions/beta.hpp>

#include "cascade/envgen.hpp"
#include "oracles.hpp"

using namespace cascade;

TEST_CASE("Beta instance grid") {
    Rng rng(1);
    const auto instances = sample_beta_instances(30, 3, rng);
    CHECK(instances.size() == 400);
    std::size_t inside = 0, total = 0;
    for (std::size_t n = 0; n < instances.size(); ++n) {
        const auto& inst = instances[n];
        CHECK(inst.kind == InstanceKind::bernoulli);
        CHECK(inst.prior == instances[n - n % 20].prior);
        for (std::size_t i = 0; i < inst.L; ++i) {
            CHECK(inst.means[i] > 0.0);
            CHECK(inst.means[i] < 1.0);
            CHECK(inst.prior.beta2[i] == 10.0);
            CHECK(inst.prior.beta1[i] >= 1.0);
            CHECK(inst.prior.beta1[i] <= 10.0);
            CHECK(inst.prior.beta1[i] == std::round(inst.prior.beta1[i]));
            inside += inst.means[i] > 0.05 && inst.means[i] < 0.55;
            ++total;
        }
    }
    // The prior means β₁/(β₁+10) span [1/11, 1/2]. Individual draws spread
    // wider, so the share inside (0.05, 0.55) is compared with the exact
    // mixture probability rather than a fixed fraction.
    double expected = 0.0;
    for (int b1 = 1; b1 <= 10; ++b1) {
        expected += (boost::math::ibeta(b1, 10.0, 0.55) - boost::math::ibeta(b1, 10.0, 0.05)) / 10.0;
    }
    const double share = static_cast<double>(inside) / total;
    CHECK(std::abs(share - expected) < 0.03);
}

TEST_CASE("Beta prior means") {
    Rng rng(21);
    for (int rep = 0; rep < 1000; ++rep) {
        const PriorSpec prior = sample_beta_prior(10, rng);
        for (std::size_t i = 0; i < 10; ++i) {
            const double m = prior.beta1[i] / (prior.beta1[i] + prior.beta2[i]);
            CHECK(m >= 1.0 / 11.0 - 1e-15);
            CHECK(m <= 0.5);
        }
    }
}

TEST_CASE("Beta instance mean") {
    Rng rng(2);
    PriorSpec prior;
    prior.beta1.assign(10, 5.0);
    prior.beta2.assign(10, 10.0);
    double sum = 0.0, sum_sq = 0.0;
    const int rounds = 10000;
    for (int r = 0; r < rounds; ++r) {
        for (double m : sample_bernoulli_instance(prior, 2, rng).means) {
            sum += m;
            sum_sq += m * m;
        }
    }
    const double n = rounds * 10.0;
    const double mean = sum / n;
    const double sd = std::sqrt(sum_sq / n - mean * mean);
    CHECK(std::abs(mean - 1.0 / 3.0) <= 3.0 * sd / std::sqrt(n));
}

TEST_CASE("misspecified prior") {
    const PriorSpec p0 = misspecified_prior(0, 4);
    CHECK(p0.beta1 == std::vector<double>(4, 1.0));
    CHECK(p0.beta2 == std::vector<double>(4, 10.0));
    const PriorSpec p8 = misspecified_prior(8, 4);
    CHECK(p8.beta1[0] == 9.0);
    CHECK(p8.beta2[0] == 2.0);
    for (int c = 0; c <= 8; ++c) {
        const PriorSpec p = misspecified_prior(c, 1);
        CHECK(p.beta1[0] / (p.beta1[0] + p.beta2[0]) == doctest::Approx((1.0 + c) / 11.0));
    }
    CHECK_THROWS(misspecified_prior(9, 4));
    CHECK_THROWS(misspecified_prior(-1, 4));
}

TEST_CASE("linear instance") {
    Rng rng(3);
    const BanditInstance inst = sample_linear_instance(30, 3, 5, rng);
    CHECK(inst.theta_star.norm() == doctest::Approx(1.0));
    for (Eigen::Index i = 0; i < 30; ++i) {
        CHECK(inst.features.row(i).norm() == doctest::Approx(1.0));
        const double z = inst.features.row(i).dot(inst.theta_star);
        CHECK(z >= 0.0);
        CHECK(z <= 1.0 + 1e-12);
        CHECK(inst.means[static_cast<std::size_t>(i)] == doctest::Approx(z));
    }

    Rng small(4);
    const BanditInstance six = sample_linear_instance(6, 3, 4, small);
    double best_sum = 0.0;
    for (const auto& list : oracle::ordered_lists(6, 3)) {
        double s = 0.0;
        for (auto i : list) s += six.means[i];
        best_sum = std::max(best_sum, s);
    }
    double chosen = 0.0;
    for (auto i : best_action(six.means, 3)) chosen += six.means[i];
    CHECK(chosen == doctest::Approx(best_sum).epsilon(1e-12));
}

TEST_CASE("logistic instance") {
    Rng a(5), b(5);
    const BanditInstance inst = sample_logistic_instance(30, 3, 5, a);
    const BanditInstance same = sample_logistic_instance(30, 3, 5, b);
    CHECK(inst.means == same.means);
    for (std::size_t i = 0; i < 30; ++i) {
        CHECK(inst.means[i] >= 0.5);
        CHECK(inst.means[i] <= 1.0 / (1.0 + std::exp(-1.0)) + 1e-12);
        const double prior_mean = inst.prior.beta1[i] / (inst.prior.beta1[i] + inst.prior.beta2[i]);
        CHECK(prior_mean == doctest::Approx(inst.means[i]).epsilon(1e-12));
    }
}

TEST_CASE("env step") {
    Rng rng(6);
    PriorSpec prior;
    prior.beta1.assign(4, 1.0);
    prior.beta2.assign(4, 1.0);
    BanditInstance inst = sample_bernoulli_instance(prior, 3, rng);
    inst.means = {0.0, 0.0, 0.0, 0.0};
    const RankedAction a({0, 1, 2}, 4);
    const Feedback fb = env_step(inst, a, rng);
    CHECK(fb.click_position == 3);
    CHECK(fb.realized_reward() == 0.0);

    inst.means = {0.3, 0.6, 0.2, 0.9};
    const int n = 10000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const Feedback f = env_step(inst, a, rng);
        total += f.realized_reward();
        for (std::size_t j = static_cast<std::size_t>(f.click_position); j < 3; ++j) {
            CHECK(f.values[j] == 0.0);
        }
    }
    const double expected = expected_cascade_reward(inst.means, a);
    CHECK(std::abs(total / n - expected) <= 3.0 * std::sqrt(expected * (1 - expected) / n));
}

TEST_CASE("environment common random numbers") {
    Rng rng(7);
    const BanditInstance inst = sample_linear_instance(8, 3, 4, rng);
    Environment e1(inst, {}, 99);
    Environment e2(inst, {}, 99);
    for (int t = 0; t < 200; ++t) {
        e1.begin_round();
        e2.begin_round();
        // different actions, same attraction draws
        const Feedback f1 = e1.step(RankedAction({0, 1, 2}, 8));
        const Feedback f2 = e2.step(RankedAction({0, 3, 4}, 8));
        CHECK(f1.values[0] == f2.values[0]);
        CHECK(e1.regret(e1.best_action()) == 0.0);
        CHECK(e1.regret(RankedAction({0, 1, 2}, 8)) >= 0.0);
    }
}

TEST_CASE("environment feature redraw and gaussian feedback") {
    Rng rng(8);
    const BanditInstance inst = sample_linear_instance(6, 2, 3, rng);
    EnvironmentOptions redraw;
    redraw.redraw_features = true;
    Environment env(inst, redraw, 1);
    env.begin_round();
    const Matrix first = env.features();
    env.begin_round();
    CHECK((env.features() - first).norm() > 0.0);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(env.features().row(i).norm() == doctest::Approx(1.0));

    EnvironmentOptions gauss;
    gauss.linear_feedback = LinearFeedbackMode::gaussian;
    gauss.noise_sd = 0.0;
    gauss.threshold = 2.0;
    Environment g(inst, gauss, 1);
    g.begin_round();
    const RankedAction a({0, 1}, 6);
    const Feedback fb = g.step(a);
    CHECK(fb.click_position == 2);
    CHECK(fb.values[0] == doctest::Approx(inst.means[0]));
    CHECK(g.regret(g.best_action()) == 0.0);

    PriorSpec prior;
    prior.beta1.assign(3, 1.0);
    prior.beta2.assign(3, 1.0);
    Rng r2(1);
    CHECK_THROWS(Environment(sample_bernoulli_instance(prior, 2, r2), redraw, 1));
}

TEST_CASE("instance JSON round trip") {
    Rng rng(9);
    const auto dir = std::filesystem::temp_directory_path() / "cascade_envgen_test";
    std::filesystem::create_directories(dir);
    for (const BanditInstance& inst :
         {sample_logistic_instance(7, 2, 3, rng),
          sample_bernoulli_instance(sample_beta_prior(5, rng), 2, rng),
          sample_linear_instance(4, 2, 2, rng)}) {
        const auto path = dir / "instance.json";
        save_instance(inst, path);
        const BanditInstance back = load_instance(path);
        CHECK(back.kind == inst.kind);
        CHECK(back.L == inst.L);
        CHECK(back.K == inst.K);
        CHECK(back.d == inst.d);
        CHECK(back.means == inst.means);
        CHECK(back.theta_star == inst.theta_star);
        CHECK(back.features == inst.features);
        CHECK(back.prior == inst.prior);
    }
    std::filesystem::remove_all(dir);

    nlohmann::json bad = to_json(sample_linear_instance(4, 2, 2, rng));
    bad["version"] = 7;
    CHECK_THROWS(instance_from_json(bad));
}
