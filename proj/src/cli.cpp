#include "cascade/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cascade/config.hpp"
#include "cascade/harness.hpp"
#include "cascade/letor.hpp"
#include "cascade/policy.hpp"
#include "cascade/report.hpp"

namespace cascade {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    KeyValueConfig kv = path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
    for (const auto& o : overrides) kv.set_override(o);
    ExperimentConfig config = ExperimentConfig::from(kv);
    if (const char* threads = std::getenv("CASCADE_BANDITS_THREADS")) {
        const int n = std::atoi(threads);
        if (n >= 1) config.parallelism = n;
    }
    return config;
}

std::filesystem::path meta_path(const std::filesystem::path& output) {
    return output.string() + ".meta.json";
}

int cmd_run(const ExperimentConfig& config, std::ostream& out) {
    const ResultTable table = run_experiment(config);
    emit_csv(table, config.output);
    emit_metadata(table.metadata, meta_path(config.output));
    if (!config.plot_output.empty()) emit_plot_data(table, config.plot_output);
    if (!config.svg_output.empty()) emit_svg(table, config.svg_output);
    for (const auto& name : table.algorithm_order()) {
        const auto& row = table.final_row(name);
        out << name << ": mean cumulative regret " << format_number(row.mean_cum_regret)
            << " ± " << format_number(row.stderr_cum_regret) << " at T=" << row.round << " ("
            << row.n_reps << " runs)\n";
    }
    for (const auto& d : table.metadata.diagnostics) {
        out << "warning: replication " << d.replication << " of " << d.algorithm
            << " failed: " << d.message << '\n';
    }
    out << "wrote " << config.output.string() << '\n';
    return 0;
}

int cmd_sweep(const ExperimentConfig& config, std::ostream& out) {
    const SweepTable table = run_misspecification_sweep(config, config.sweep, config.sweep_T);
    emit_sweep_csv(table, config.output);
    emit_metadata(table.metadata, meta_path(config.output));
    for (const auto& row : table.rows) {
        out << "c=" << row.shift << ' ' << row.result.algorithm << ": "
            << format_number(row.result.mean_cum_regret) << '\n';
    }
    out << "wrote " << config.output.string() << '\n';
    return 0;
}

struct IngestArgs {
    std::string input;
    std::string output;
    std::string stats;
    double gamma = 0.8;
    std::size_t limit = 0;
    std::size_t K = 10;
    bool strict = false;
};

int cmd_ingest(const IngestArgs& args, std::ostream& out, std::ostream& err) {
    ParseOptions options;
    options.limit = args.limit;
    options.strict = args.strict;
    const auto queries = parse_svmlight(args.input, options);
    if (queries.empty()) throw std::runtime_error("no queries in " + args.input);

    std::optional<NormalizationStats> stats;
    if (!args.stats.empty()) {
        std::ifstream in(args.stats);
        if (!in) throw std::runtime_error("cannot read " + args.stats);
        stats = stats_from_json(nlohmann::json::parse(in));
    }
    const auto [normalized, used] = normalize_and_filter(queries, stats);

    const std::filesystem::path dir(args.output);
    std::filesystem::create_directories(dir);
    {
        std::ofstream s(dir / "stats.json");
        if (!s) throw std::runtime_error("cannot write stats to " + dir.string());
        s << to_json(used).dump(2) << '\n';
    }
    std::size_t written = 0;
    for (const auto& q : normalized) {
        auto inst = query_to_instance(q, args.K, args.gamma);
        if (!inst) {
            err << "warning: query " << q.query_id << " has " << q.docs.size()
                << " documents (< K=" << args.K << "), skipped\n";
            continue;
        }
        char name[64];
        std::snprintf(name, sizeof(name), "query_%08ld.json", q.query_id);
        save_instance(*inst, dir / name);
        ++written;
    }
    out << "parsed " << queries.size() << " queries; kept " << used.kept_features.size() << " of "
        << used.input_dim << " features; wrote " << written << " instances to " << dir.string()
        << '\n';
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Thompson-sampling cascading bandits: simulations and regret benchmarks",
                 "cascade_bandits"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "run a regret experiment");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--set", overrides, "override a config key (key=value)");

    std::string sweep_config;
    auto* sweep = app.add_subcommand("sweep", "prior-misspecification sweep");
    sweep->add_option("--config", sweep_config, "experiment config file");
    sweep->add_option("--set", overrides, "override a config key (key=value)");

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "convert a LETOR file into query instances");
    ingest->add_option("--input", ingest_args.input, "SVMLight ranking file (.gz accepted)")
        ->required();
    ingest->add_option("--output", ingest_args.output, "output directory")->required();
    ingest->add_option("--gamma", ingest_args.gamma, "attraction of a relevance-4 document");
    ingest->add_option("--limit", ingest_args.limit, "read at most N queries");
    ingest->add_option("--K", ingest_args.K, "list length of the generated instances");
    ingest->add_option("--stats", ingest_args.stats, "reuse normalization stats (JSON)");
    ingest->add_flag("--strict", ingest_args.strict, "require contiguous query ids");

    std::string plot_input;
    std::string plot_output;
    std::string plot_data;
    std::string plot_title;
    auto* plot = app.add_subcommand("plot", "render a results CSV as SVG");
    plot->add_option("--input", plot_input, "results CSV")->required();
    plot->add_option("--output", plot_output, "SVG path")->required();
    plot->add_option("--data", plot_data, "also write gnuplot data");
    plot->add_option("--title", plot_title, "chart title");

    auto* list = app.add_subcommand("list-algorithms", "print the available algorithms");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (list->parsed()) {
            for (const auto& name : algorithm_names()) out << name << '\n';
            return 0;
        }
        if (run->parsed()) return cmd_run(load_config(config_path, overrides), out);
        if (sweep->parsed()) return cmd_sweep(load_config(sweep_config, overrides), out);
        if (ingest->parsed()) return cmd_ingest(ingest_args, out, err);
        if (plot->parsed()) {
            const ResultTable table = read_csv(std::filesystem::path(plot_input));
            emit_svg(table, std::filesystem::path(plot_output), plot_title);
            if (!plot_data.empty()) emit_plot_data(table, std::filesystem::path(plot_data));
            out << "wrote " << plot_output << '\n';
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    err << app.help();
    return 1;
}

}  // namespace cascade
