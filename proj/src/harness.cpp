#include "cascade/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "cascade/policy.hpp"

#ifndef CASCADE_GIT_DESCRIBE
#define CASCADE_GIT_DESCRIBE "unknown"
#endif

namespace cascade {

std::vector<ResultRow> ResultTable::series(const std::string& algorithm) const {
    std::vector<ResultRow> out;
    for (const auto& row : rows) {
        if (row.algorithm == algorithm) out.push_back(row);
    }
    return out;
}

const ResultRow& ResultTable::final_row(const std::string& algorithm) const {
    const ResultRow* last = nullptr;
    for (const auto& row : rows) {
        if (row.algorithm == algorithm && (last == nullptr || row.round >= last->round)) last = &row;
    }
    if (last == nullptr) throw std::out_of_range("no results for algorithm '" + algorithm + "'");
    return *last;
}

std::vector<std::string> ResultTable::algorithm_order() const {
    std::vector<std::string> out;
    for (const auto& row : rows) {
        if (std::find(out.begin(), out.end(), row.algorithm) == out.end()) {
            out.push_back(row.algorithm);
        }
    }
    return out;
}

const ResultRow& SweepTable::at(int shift, const std::string& algorithm) const {
    for (const auto& row : rows) {
        if (row.shift == shift && row.result.algorithm == algorithm) return row.result;
    }
    throw std::out_of_range("no sweep cell for c=" + std::to_string(shift) + ", " + algorithm);
}

std::vector<long> checkpoint_rounds(long T, long log_every) {
    std::vector<long> out;
    for (long t = log_every; t < T; t += log_every) out.push_back(t);
    out.push_back(T);
    return out;
}

namespace {

/// Instances available to an experiment; immutable once built.
class InstanceSource {
public:
    explicit InstanceSource(const ExperimentConfig& config) : config_(config) {
        if (config.env != EnvironmentKind::letor) return;
        std::vector<std::filesystem::path> files;
        if (std::filesystem::is_directory(config.letor_instances)) {
            for (const auto& entry : std::filesystem::directory_iterator(config.letor_instances)) {
                const auto name = entry.path().filename().string();
                if (entry.path().extension() == ".json" && name.rfind("query_", 0) == 0) {
                    files.push_back(entry.path());
                }
            }
            std::sort(files.begin(), files.end());
        } else {
            files.push_back(config.letor_instances);
        }
        if (config.letor_queries > 0 && files.size() > config.letor_queries) {
            files.resize(config.letor_queries);
        }
        if (files.empty()) {
            throw std::runtime_error("no query instances found in " + config.letor_instances.string());
        }
        for (const auto& f : files) {
            BanditInstance inst = load_instance(f);
            if (inst.L < config.K) {
                throw std::runtime_error(f.string() + " has fewer documents than K");
            }
            inst.K = config.K;
            queries_.push_back(std::move(inst));
        }
    }

    long runs() const {
        return config_.env == EnvironmentKind::letor
                   ? static_cast<long>(queries_.size()) * config_.replications
                   : config_.replications;
    }

    BanditInstance instance(long replication) const {
        const auto& c = config_;
        switch (c.env) {
            case EnvironmentKind::bernoulli: {
                PriorSpec prior;
                if (c.fixed_true_prior) {
                    prior = misspecified_prior(0, c.L);
                } else {
                    const auto group = static_cast<std::uint64_t>(replication) / c.n_inner;
                    Rng prior_rng(derive_seed(c.seed, group, 0, Stream::prior));
                    prior = sample_beta_prior(c.L, prior_rng);
                }
                Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(replication), 0,
                                    Stream::instance));
                return sample_bernoulli_instance(prior, c.K, rng);
            }
            case EnvironmentKind::linear: {
                Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(replication), 0,
                                    Stream::instance));
                return sample_linear_instance(c.L, c.K, c.d, rng);
            }
            case EnvironmentKind::logistic: {
                Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(replication), 0,
                                    Stream::instance));
                return sample_logistic_instance(c.L, c.K, c.d, rng);
            }
            case EnvironmentKind::letor:
                return queries_.at(static_cast<std::size_t>(replication / c.replications));
        }
        throw std::logic_error("unhandled environment kind");
    }

private:
    const ExperimentConfig& config_;
    std::vector<BanditInstance> queries_;
};

PolicyParams policy_params(const ExperimentConfig& c, const BanditInstance& inst) {
    PolicyParams p;
    p.L = inst.L;
    p.K = inst.K;
    p.d = inst.d;
    p.horizon = c.T;
    p.gts = {inst.L, inst.K, c.gts_prior_mean, c.gts_prior_var, c.gts_noise_var};
    if (c.prior_shift) {
        const PriorSpec prior = misspecified_prior(*c.prior_shift, inst.L);
        p.prior_alphas = prior.beta1;
        p.prior_betas = prior.beta2;
    } else if (!inst.prior.beta1.empty()) {
        p.prior_alphas = inst.prior.beta1;
        p.prior_betas = inst.prior.beta2;
    } else {
        p.prior_alphas.assign(inst.L, 1.0);
        p.prior_betas.assign(inst.L, 1.0);
    }
    p.contextual.lambda = c.lambda;
    p.contextual.S = c.S;
    p.contextual.sigma_sq = c.sigma_sq;
    p.contextual.delta = c.delta;
    p.contextual.square_sigma = c.square_sigma;
    p.contextual.sample_scale = c.sample_scale;
    p.irls.tol = c.irls_tol;
    p.irls.max_iter = c.irls_max_iter;
    p.refit_every = c.refit_every;
    p.project_to_ball = c.project_to_ball;
    p.newton_step_size = c.newton_step_size;
    p.newton_sample_scale = c.newton_sample_scale;
    p.linucb_confidence_scale = c.linucb_confidence_scale;
    return p;
}

ReplicationTrace run_one(const ExperimentConfig& config, const BanditInstance& instance,
                         long replication, std::size_t algorithm_index, bool keep_steps) {
    ReplicationTrace trace;
    const std::string& name = config.algorithms.at(algorithm_index);
    try {
        Environment env(instance, config.environment,
                        derive_seed(config.seed, static_cast<std::uint64_t>(replication), 0,
                                    Stream::environment));
        PolicyPtr policy;
        if (name != "oracle") {
            policy = make_policy(name, policy_params(config, instance),
                                 derive_seed(config.seed, static_cast<std::uint64_t>(replication),
                                             algorithm_index, Stream::policy));
        }
        const auto checkpoints = checkpoint_rounds(config.T, config.log_every);
        trace.cumulative.reserve(checkpoints.size());
        if (keep_steps) trace.step_regret.reserve(static_cast<std::size_t>(config.T));
        std::size_t next = 0;
        double cumulative = 0.0;
        for (long t = 1; t <= config.T; ++t) {
            env.begin_round();
            const Context ctx = env.context();
            const RankedAction action = policy ? policy->select(ctx) : env.best_action();
            const double r = env.regret(action);
            cumulative += r;
            if (keep_steps) trace.step_regret.push_back(r);
            const Feedback fb = env.step(action);
            if (policy) policy->update(action, fb, ctx);
            if (t == checkpoints[next]) {
                trace.cumulative.push_back(cumulative);
                ++next;
            }
        }
    } catch (const std::exception& e) {
        trace.cumulative.clear();
        trace.error = e.what();
    }
    return trace;
}

}  // namespace

long total_runs(const ExperimentConfig& config) { return InstanceSource(config).runs(); }

BanditInstance replication_instance(const ExperimentConfig& config, long replication) {
    return InstanceSource(config).instance(replication);
}

ReplicationTrace run_single(const ExperimentConfig& config, long replication,
                            std::size_t algorithm_index, bool keep_steps) {
    const InstanceSource source(config);
    return run_one(config, source.instance(replication), replication, algorithm_index,
                   keep_steps);
}

ResultTable run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const InstanceSource source(config);
    const long runs = source.runs();
    const std::size_t n_alg = config.algorithms.size();

    std::vector<std::vector<ReplicationTrace>> traces(static_cast<std::size_t>(runs));
    std::atomic<long> next{0};
    std::mutex error_mutex;
    std::exception_ptr fatal;

    auto worker = [&] {
        for (long r = next++; r < runs; r = next++) {
            try {
                const BanditInstance inst = source.instance(r);
                auto& row = traces[static_cast<std::size_t>(r)];
                row.reserve(n_alg);
                for (std::size_t a = 0; a < n_alg; ++a) {
                    row.push_back(run_one(config, inst, r, a, false));
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!fatal) fatal = std::current_exception();
            }
        }
    };

    const int threads = static_cast<int>(std::min<long>(config.parallelism, runs));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    ResultTable table;
    table.metadata.config_hash = config.hash();
    table.metadata.seed = config.seed;
    table.metadata.git_describe = CASCADE_GIT_DESCRIBE;

    const auto checkpoints = checkpoint_rounds(config.T, config.log_every);
    for (std::size_t a = 0; a < n_alg; ++a) {
        std::vector<const ReplicationTrace*> ok;
        for (long r = 0; r < runs; ++r) {
            const auto& trace = traces[static_cast<std::size_t>(r)][a];
            if (trace.error.empty()) {
                ok.push_back(&trace);
            } else {
                table.metadata.diagnostics.push_back({r, config.algorithms[a], trace.error});
                if (config.strict) {
                    throw std::runtime_error("replication " + std::to_string(r) + " of " +
                                             config.algorithms[a] + " failed: " + trace.error);
                }
            }
        }
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            ResultRow row;
            row.algorithm = config.algorithms[a];
            row.round = checkpoints[c];
            row.n_reps = static_cast<long>(ok.size());
            if (!ok.empty()) {
                double sum = 0.0;
                for (const auto* t : ok) sum += t->cumulative[c];
                const double n = static_cast<double>(ok.size());
                row.mean_cum_regret = sum / n;
                if (ok.size() > 1) {
                    double sq = 0.0;
                    for (const auto* t : ok) {
                        const double dev = t->cumulative[c] - row.mean_cum_regret;
                        sq += dev * dev;
                    }
                    row.stderr_cum_regret = std::sqrt(sq / (n - 1.0)) / std::sqrt(n);
                }
            }
            table.rows.push_back(std::move(row));
        }
    }
    table.metadata.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return table;
}

SweepTable run_misspecification_sweep(const ExperimentConfig& config,
                                      const std::vector<int>& c_values, long T) {
    if (config.env != EnvironmentKind::bernoulli) {
        throw ConfigError("the misspecification sweep needs the bernoulli environment");
    }
    const auto start = std::chrono::steady_clock::now();
    SweepTable table;
    for (int c : c_values) {
        ExperimentConfig cfg = config;
        cfg.fixed_true_prior = true;
        cfg.prior_shift = c;
        cfg.T = T;
        cfg.log_every = T;
        const ResultTable result = run_experiment(cfg);
        for (const auto& name : cfg.algorithms) {
            table.rows.push_back({c, result.final_row(name)});
        }
        for (const auto& d : result.metadata.diagnostics) table.metadata.diagnostics.push_back(d);
    }
    ExperimentConfig meta = config;
    meta.sweep = c_values;
    meta.sweep_T = T;
    table.metadata.config_hash = meta.hash();
    table.metadata.seed = config.seed;
    table.metadata.git_describe = CASCADE_GIT_DESCRIBE;
    table.metadata.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return table;
}

}  // namespace cascade
