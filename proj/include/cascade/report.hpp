#pragma once

// CSV, gnuplot and SVG outputs for experiment results.

#include <filesystem>
#include <iosfwd>

#include "cascade/harness.hpp"

namespace cascade {

inline constexpr const char* kCsvHeader = "algorithm,round,mean_cum_regret,stderr,n_reps";
inline constexpr const char* kSweepCsvHeader = "c,algorithm,round,mean_cum_regret,stderr,n_reps";

/// Shortest text that parses back to the same double.
std::string format_number(double value);

void emit_csv(const ResultTable& table, std::ostream& out);
void emit_csv(const ResultTable& table, const std::filesystem::path& path);
ResultTable read_csv(std::istream& in);
ResultTable read_csv(const std::filesystem::path& path);

void emit_sweep_csv(const SweepTable& table, const std::filesystem::path& path);

/// Per-algorithm blocks of `round mean stderr`, separated by two blank lines
/// (gnuplot `index` layout).
void emit_plot_data(const ResultTable& table, std::ostream& out);
void emit_plot_data(const ResultTable& table, const std::filesystem::path& path);

/// Self-contained SVG line chart of mean cumulative regret with ±1 stderr bands.
void emit_svg(const ResultTable& table, std::ostream& out, const std::string& title = {});
void emit_svg(const ResultTable& table, const std::filesystem::path& path,
              const std::string& title = {});

/// Run metadata as JSON (config hash, seed, git describe, wall time, diagnostics).
void emit_metadata(const ResultMetadata& metadata, const std::filesystem::path& path);

}  // namespace cascade
