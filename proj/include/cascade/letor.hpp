#pragma once

// LETOR / SVMLight ranking data: parsing, feature normalization and
// conversion of queries into replayable bandit instances.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cascade/envgen.hpp"

namespace cascade {

struct LetorDocument {
    int relevance = 0;
    Vector features;
};

struct LetorQuery {
    long query_id = 0;
    std::vector<LetorDocument> docs;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct ParseOptions {
    /// Reject files whose query ids are not contiguous.
    bool strict = false;
    /// Stop after this many queries (0 = no limit).
    std::size_t limit = 0;
};

/// Parses `<rel> qid:<id> <idx>:<val> ... # comment` lines. Feature indices
/// are 1-based and may be sparse; vectors are densified to the largest index
/// seen. Gzip-compressed files are read transparently.
std::vector<LetorQuery> parse_svmlight(const std::filesystem::path& path,
                                       const ParseOptions& options = {});
std::vector<LetorQuery> parse_svmlight(std::istream& in, const ParseOptions& options = {});

/// Writes queries in SVMLight format with shortest round-trip number
/// formatting. Zero entries are omitted except the last column.
void write_svmlight(const std::vector<LetorQuery>& queries, std::ostream& out);
void write_svmlight(const std::vector<LetorQuery>& queries, const std::filesystem::path& path);

struct NormalizationStats {
    int input_dim = 0;
    std::vector<double> mins;
    std::vector<double> maxs;
    /// Mean and standard deviation of each feature after min-max scaling.
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<int> kept_features;
    /// Divisor applied after filtering so the largest document norm is 1.
    double norm_scale = 1.0;

    static constexpr double kMinStd = 1e-6;
};

/// Computes split-level statistics from `queries`.
NormalizationStats compute_normalization_stats(const std::vector<LetorQuery>& queries);

/// Min-max scales every feature, drops features whose scaled standard
/// deviation is below 1e-6 and rescales documents to norm at most 1. When
/// `stats` is given (e.g. from the training split) it is applied as is.
std::pair<std::vector<LetorQuery>, NormalizationStats> normalize_and_filter(
    const std::vector<LetorQuery>& queries, const std::optional<NormalizationStats>& stats = {});

nlohmann::json to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const nlohmann::json& doc);

/// Logistic-kind instance with attraction γ·rel/4 per document and Beta
/// priors Beta(10p/(1−p), 10), p clamped to [0.01, 0.99]. Returns nullopt
/// when the query has fewer than K documents.
std::optional<BanditInstance> query_to_instance(const LetorQuery& query, std::size_t K,
                                                double gamma = 0.8);

}  // namespace cascade
