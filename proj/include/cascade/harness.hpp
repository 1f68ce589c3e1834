#pragma once

// Replicated regret experiments: every replication draws a fresh instance,
// runs each configured algorithm on it with common environment randomness
// and records cumulative regret at checkpoints.

#include <string>
#include <vector>

#include "cascade/config.hpp"

namespace cascade {

struct ResultRow {
    std::string algorithm;
    long round = 0;
    double mean_cum_regret = 0.0;
    double stderr_cum_regret = 0.0;
    long n_reps = 0;

    bool operator==(const ResultRow&) const = default;
};

struct RunDiagnostic {
    long replication = 0;
    std::string algorithm;
    std::string message;
};

struct ResultMetadata {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string git_describe;
    double wall_seconds = 0.0;
    std::vector<RunDiagnostic> diagnostics;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    ResultMetadata metadata;

    /// Rows of one algorithm in checkpoint order.
    std::vector<ResultRow> series(const std::string& algorithm) const;
    const ResultRow& final_row(const std::string& algorithm) const;
    std::vector<std::string> algorithm_order() const;
};

struct SweepRow {
    int shift = 0;
    ResultRow result;
};

struct SweepTable {
    std::vector<SweepRow> rows;
    ResultMetadata metadata;

    const ResultRow& at(int shift, const std::string& algorithm) const;
};

/// Checkpoint rounds: every `log_every` rounds plus the horizon.
std::vector<long> checkpoint_rounds(long T, long log_every);

/// Cumulative regret of one algorithm on one replication at the checkpoints.
struct ReplicationTrace {
    std::vector<double> cumulative;
    std::vector<double> step_regret;  // filled only when requested
    std::string error;
};

/// Runs one (replication, algorithm) pair; exposed for tests and tooling.
/// The name "oracle" plays the best list every round.
ReplicationTrace run_single(const ExperimentConfig& config, long replication,
                            std::size_t algorithm_index, bool keep_steps = false);

/// The instance replication `replication` plays.
BanditInstance replication_instance(const ExperimentConfig& config, long replication);

/// Number of runs per algorithm (replications, times queries for LETOR).
long total_runs(const ExperimentConfig& config);

ResultTable run_experiment(const ExperimentConfig& config);

SweepTable run_misspecification_sweep(const ExperimentConfig& config,
                                      const std::vector<int>& c_values, long T);

}  // namespace cascade
