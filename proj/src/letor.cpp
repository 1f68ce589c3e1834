#include "cascade/letor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <istream>
#include <map>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include <zlib.h>

namespace cascade {

namespace {

struct RawDoc {
    int relevance;
    std::vector<std::pair<int, double>> entries;
};

struct Grouper {
    ParseOptions options;
    std::vector<long> order;
    std::unordered_map<long, std::vector<RawDoc>> groups;
    long last_qid = 0;
    bool have_last = false;
    bool done = false;
    int max_index = 0;

    template <class T>
    static bool parse_number(std::string_view text, T& value) {
        const char* first = text.data();
        const char* last = text.data() + text.size();
        if (first != last && *first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, last, value);
        return ec == std::errc() && ptr == last;
    }

    void line(std::string_view text, std::size_t line_no) {
        if (done) return;
        if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);

        std::vector<std::string_view> tokens;
        std::size_t pos = 0;
        while (pos < text.size()) {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
            std::size_t end = pos;
            while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
            if (end > pos) tokens.push_back(text.substr(pos, end - pos));
            pos = end;
        }
        if (tokens.empty()) return;
        if (tokens.size() < 2) throw ParseError("expected '<rel> qid:<id>'", line_no);

        RawDoc doc;
        double rel_value = 0.0;
        if (!parse_number(tokens[0], rel_value) || rel_value != std::floor(rel_value)) {
            throw ParseError("invalid relevance label '" + std::string(tokens[0]) + "'", line_no);
        }
        doc.relevance = static_cast<int>(rel_value);
        if (doc.relevance < 0 || doc.relevance > 4) {
            throw ParseError("relevance label outside [0,4]", line_no);
        }
        if (tokens[1].substr(0, 4) != "qid:") throw ParseError("missing qid field", line_no);
        long qid = 0;
        if (!parse_number(tokens[1].substr(4), qid)) throw ParseError("invalid qid", line_no);

        for (std::size_t t = 2; t < tokens.size(); ++t) {
            const auto colon = tokens[t].find(':');
            int index = 0;
            double value = 0.0;
            if (colon == std::string_view::npos || !parse_number(tokens[t].substr(0, colon), index) ||
                !parse_number(tokens[t].substr(colon + 1), value)) {
                throw ParseError("malformed feature '" + std::string(tokens[t]) + "'", line_no);
            }
            if (index < 1) throw ParseError("feature indices are 1-based", line_no);
            if (!std::isfinite(value)) throw ParseError("non-finite feature value", line_no);
            doc.entries.emplace_back(index, value);
        }

        auto it = groups.find(qid);
        if (it == groups.end()) {
            if (options.limit > 0 && order.size() >= options.limit) {
                done = true;
                return;
            }
            order.push_back(qid);
            it = groups.emplace(qid, std::vector<RawDoc>{}).first;
        } else if (options.strict && have_last && last_qid != qid) {
            throw ParseError("query " + std::to_string(qid) + " is not contiguous", line_no);
        }
        for (const auto& [index, value] : doc.entries) max_index = std::max(max_index, index);
        it->second.push_back(std::move(doc));
        last_qid = qid;
        have_last = true;
    }

    std::vector<LetorQuery> finish() {
        std::vector<LetorQuery> out;
        out.reserve(order.size());
        for (auto qid : order) {
            LetorQuery q;
            q.query_id = qid;
            for (auto& raw : groups[qid]) {
                LetorDocument doc;
                doc.relevance = raw.relevance;
                doc.features = Vector::Zero(max_index);
                for (const auto& [index, value] : raw.entries) doc.features[index - 1] = value;
                q.docs.push_back(std::move(doc));
            }
            out.push_back(std::move(q));
        }
        return out;
    }
};

}  // namespace

std::vector<LetorQuery> parse_svmlight(std::istream& in, const ParseOptions& options) {
    Grouper g;
    g.options = options;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        g.line(line, ++line_no);
        if (g.done) break;
    }
    return g.finish();
}

std::vector<LetorQuery> parse_svmlight(const std::filesystem::path& path,
                                       const ParseOptions& options) {
    gzFile file = gzopen(path.string().c_str(), "rb");
    if (file == nullptr) throw std::runtime_error("cannot open " + path.string());
    Grouper g;
    g.options = options;
    std::string line;
    std::vector<char> buffer(1 << 16);
    std::size_t line_no = 0;
    try {
        while (gzgets(file, buffer.data(), static_cast<int>(buffer.size())) != nullptr) {
            line.append(buffer.data());
            if (!line.empty() && line.back() == '\n') {
                line.pop_back();
                g.line(line, ++line_no);
                line.clear();
                if (g.done) break;
            }
        }
        if (!line.empty() && !g.done) g.line(line, ++line_no);
    } catch (...) {
        gzclose(file);
        throw;
    }
    gzclose(file);
    return g.finish();
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

void write_svmlight(const std::vector<LetorQuery>& queries, std::ostream& out) {
    for (const auto& q : queries) {
        for (const auto& doc : q.docs) {
            out << doc.relevance << " qid:" << q.query_id;
            const auto n = doc.features.size();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (doc.features[j] != 0.0 || j + 1 == n) {
                    out << ' ' << (j + 1) << ':' << format_double(doc.features[j]);
                }
            }
            out << '\n';
        }
    }
}

void write_svmlight(const std::vector<LetorQuery>& queries, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_svmlight(queries, out);
}

// ---------------------------------------------------------------------------

NormalizationStats compute_normalization_stats(const std::vector<LetorQuery>& queries) {
    NormalizationStats stats;
    std::size_t n_docs = 0;
    for (const auto& q : queries) {
        for (const auto& doc : q.docs) {
            if (n_docs == 0) {
                stats.input_dim = static_cast<int>(doc.features.size());
                stats.mins.assign(doc.features.data(), doc.features.data() + doc.features.size());
                stats.maxs = stats.mins;
            } else if (doc.features.size() != stats.input_dim) {
                throw std::invalid_argument("documents differ in feature dimension");
            }
            for (int j = 0; j < stats.input_dim; ++j) {
                stats.mins[j] = std::min(stats.mins[j], doc.features[j]);
                stats.maxs[j] = std::max(stats.maxs[j], doc.features[j]);
            }
            ++n_docs;
        }
    }
    if (n_docs == 0) throw std::invalid_argument("no documents to normalize");

    const int d = stats.input_dim;
    auto scaled = [&](int j, double v) {
        const double range = stats.maxs[j] - stats.mins[j];
        return range > 0.0 ? (v - stats.mins[j]) / range : 0.0;
    };
    std::vector<double> sum(d, 0.0);
    for (const auto& q : queries) {
        for (const auto& doc : q.docs) {
            for (int j = 0; j < d; ++j) sum[j] += scaled(j, doc.features[j]);
        }
    }
    stats.means.resize(d);
    for (int j = 0; j < d; ++j) stats.means[j] = sum[j] / static_cast<double>(n_docs);
    std::vector<double> sq(d, 0.0);
    for (const auto& q : queries) {
        for (const auto& doc : q.docs) {
            for (int j = 0; j < d; ++j) {
                const double dev = scaled(j, doc.features[j]) - stats.means[j];
                sq[j] += dev * dev;
            }
        }
    }
    stats.stds.resize(d);
    for (int j = 0; j < d; ++j) {
        stats.stds[j] = std::sqrt(sq[j] / static_cast<double>(n_docs));
        if (stats.stds[j] >= NormalizationStats::kMinStd) stats.kept_features.push_back(j);
    }
    if (stats.kept_features.empty()) {
        throw std::invalid_argument("every feature is constant; nothing left after filtering");
    }

    double max_norm = 0.0;
    for (const auto& q : queries) {
        for (const auto& doc : q.docs) {
            double norm_sq = 0.0;
            for (int j : stats.kept_features) {
                const double v = scaled(j, doc.features[j]);
                norm_sq += v * v;
            }
            max_norm = std::max(max_norm, std::sqrt(norm_sq));
        }
    }
    stats.norm_scale = max_norm > 0.0 ? max_norm : 1.0;
    return stats;
}

std::pair<std::vector<LetorQuery>, NormalizationStats> normalize_and_filter(
    const std::vector<LetorQuery>& queries, const std::optional<NormalizationStats>& stats) {
    if (queries.empty()) throw std::invalid_argument("no queries to normalize");
    NormalizationStats s = stats ? *stats : compute_normalization_stats(queries);
    if (s.kept_features.empty()) {
        throw std::invalid_argument("every feature is constant; nothing left after filtering");
    }
    const auto kept = static_cast<Eigen::Index>(s.kept_features.size());

    std::vector<LetorQuery> out;
    out.reserve(queries.size());
    for (const auto& q : queries) {
        LetorQuery nq;
        nq.query_id = q.query_id;
        nq.docs.reserve(q.docs.size());
        for (const auto& doc : q.docs) {
            if (doc.features.size() != s.input_dim) {
                throw std::invalid_argument("document dimension does not match the statistics");
            }
            LetorDocument nd;
            nd.relevance = doc.relevance;
            nd.features.resize(kept);
            for (Eigen::Index k = 0; k < kept; ++k) {
                const int j = s.kept_features[static_cast<std::size_t>(k)];
                const double range = s.maxs[j] - s.mins[j];
                const double v = range > 0.0 ? (doc.features[j] - s.mins[j]) / range : 0.0;
                nd.features[k] = std::clamp(v, 0.0, 1.0);
            }
            nd.features /= s.norm_scale;
            // Documents outside the reference split's range may still exceed 1.
            const double norm = nd.features.norm();
            if (norm > 1.0) nd.features /= norm;
            nq.docs.push_back(std::move(nd));
        }
        out.push_back(std::move(nq));
    }
    return {std::move(out), std::move(s)};
}

nlohmann::json to_json(const NormalizationStats& stats) {
    return {{"version", 1},
            {"input_dim", stats.input_dim},
            {"mins", stats.mins},
            {"maxs", stats.maxs},
            {"means", stats.means},
            {"stds", stats.stds},
            {"kept_features", stats.kept_features},
            {"norm_scale", stats.norm_scale}};
}

NormalizationStats stats_from_json(const nlohmann::json& doc) {
    NormalizationStats s;
    s.input_dim = doc.at("input_dim").get<int>();
    s.mins = doc.at("mins").get<std::vector<double>>();
    s.maxs = doc.at("maxs").get<std::vector<double>>();
    s.means = doc.value("means", std::vector<double>{});
    s.stds = doc.value("stds", std::vector<double>{});
    s.kept_features = doc.at("kept_features").get<std::vector<int>>();
    s.norm_scale = doc.value("norm_scale", 1.0);
    if (s.mins.size() != static_cast<std::size_t>(s.input_dim) || s.maxs.size() != s.mins.size()) {
        throw std::invalid_argument("statistics arrays do not match input_dim");
    }
    for (int j : s.kept_features) {
        if (j < 0 || j >= s.input_dim) throw std::invalid_argument("kept feature out of range");
    }
    return s;
}

std::optional<BanditInstance> query_to_instance(const LetorQuery& query, std::size_t K,
                                                double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0,1]");
    if (query.docs.size() < K || K == 0) return std::nullopt;
    BanditInstance inst;
    inst.kind = InstanceKind::logistic;
    inst.L = query.docs.size();
    inst.K = K;
    inst.d = static_cast<int>(query.docs.front().features.size());
    inst.features.resize(static_cast<Eigen::Index>(inst.L), inst.d);
    inst.means.resize(inst.L);
    inst.prior.beta1.resize(inst.L);
    inst.prior.beta2.assign(inst.L, 10.0);
    for (std::size_t i = 0; i < inst.L; ++i) {
        const auto& doc = query.docs[i];
        if (doc.features.size() != inst.d) {
            throw std::invalid_argument("documents differ in feature dimension");
        }
        inst.features.row(static_cast<Eigen::Index>(i)) = doc.features.transpose();
        const double p = gamma * doc.relevance / 4.0;
        inst.means[i] = p;
        const double pc = std::clamp(p, 0.01, 0.99);
        inst.prior.beta1[i] = 10.0 * pc / (1.0 - pc);
    }
    inst.source = "qid:" + std::to_string(query.query_id);
    inst.validate();
    return inst;
}

}  // namespace cascade
