#include "cascade/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cascade {

std::string format_number(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

template <class T>
T parse_field(const std::string& text, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::runtime_error(std::string("invalid ") + what + " '" + text + "' in CSV");
    }
    return value;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

void emit_csv(const ResultTable& table, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& row : table.rows) {
        out << row.algorithm << ',' << row.round << ',' << format_number(row.mean_cum_regret) << ','
            << format_number(row.stderr_cum_regret) << ',' << row.n_reps << '\n';
    }
}

void emit_csv(const ResultTable& table, const std::filesystem::path& path) {
    if (table.rows.empty()) throw std::invalid_argument("empty result table");
    auto out = open_output(path);
    emit_csv(table, out);
}

ResultTable read_csv(std::istream& in) {
    ResultTable table;
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw std::runtime_error("CSV header does not match '" + std::string(kCsvHeader) + "'");
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 5) throw std::runtime_error("CSV row needs 5 fields: " + line);
        ResultRow row;
        row.algorithm = fields[0];
        row.round = parse_field<long>(fields[1], "round");
        row.mean_cum_regret = parse_field<double>(fields[2], "mean");
        row.stderr_cum_regret = parse_field<double>(fields[3], "stderr");
        row.n_reps = parse_field<long>(fields[4], "n_reps");
        table.rows.push_back(std::move(row));
    }
    return table;
}

ResultTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return read_csv(in);
}

void emit_sweep_csv(const SweepTable& table, const std::filesystem::path& path) {
    if (table.rows.empty()) throw std::invalid_argument("empty sweep table");
    auto out = open_output(path);
    out << kSweepCsvHeader << '\n';
    for (const auto& row : table.rows) {
        const auto& r = row.result;
        out << row.shift << ',' << r.algorithm << ',' << r.round << ','
            << format_number(r.mean_cum_regret) << ',' << format_number(r.stderr_cum_regret) << ','
            << r.n_reps << '\n';
    }
}

void emit_plot_data(const ResultTable& table, std::ostream& out) {
    bool first = true;
    for (const auto& name : table.algorithm_order()) {
        if (!first) out << "\n\n";
        first = false;
        out << "# " << name << '\n' << "# round mean_cum_regret stderr\n";
        for (const auto& row : table.series(name)) {
            out << row.round << ' ' << format_number(row.mean_cum_regret) << ' '
                << format_number(row.stderr_cum_regret) << '\n';
        }
    }
}

void emit_plot_data(const ResultTable& table, const std::filesystem::path& path) {
    if (table.rows.empty()) throw std::invalid_argument("empty result table");
    auto out = open_output(path);
    emit_plot_data(table, out);
}

void emit_svg(const ResultTable& table, std::ostream& out, const std::string& title) {
    constexpr double width = 720.0;
    constexpr double height = 440.0;
    constexpr double left = 70.0;
    constexpr double right = 170.0;
    constexpr double top = 40.0;
    constexpr double bottom = 50.0;
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22"};

    double max_x = 1.0;
    double max_y = 0.0;
    for (const auto& row : table.rows) {
        max_x = std::max(max_x, static_cast<double>(row.round));
        max_y = std::max(max_y, row.mean_cum_regret + row.stderr_cum_regret);
    }
    if (max_y <= 0.0) max_y = 1.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    auto sx = [&](double x) { return left + plot_w * x / max_x; };
    auto sy = [&](double y) { return top + plot_h * (1.0 - y / max_y); };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    if (!title.empty()) {
        out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
    }
    out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
        << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = max_x * i / 4.0;
        const double yv = max_y * i / 4.0;
        out << "<text x=\"" << sx(xv) << "\" y=\"" << top + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << format_number(std::round(xv)) << "</text>\n"
            << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << format_number(std::round(yv * 10.0) / 10.0) << "</text>\n";
    }
    out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">round</text>\n"
        << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 16 "
        << top + plot_h / 2
        << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << "cumulative regret</text>\n";

    std::size_t color = 0;
    for (const auto& name : table.algorithm_order()) {
        const auto series = table.series(name);
        const char* stroke = palette[color % (sizeof(palette) / sizeof(palette[0]))];
        // Band: upper edge forward, lower edge backward.
        out << "<polygon fill=\"" << stroke << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (const auto& row : series) {
            out << sx(static_cast<double>(row.round)) << ','
                << sy(row.mean_cum_regret + row.stderr_cum_regret) << ' ';
        }
        for (auto it = series.rbegin(); it != series.rend(); ++it) {
            out << sx(static_cast<double>(it->round)) << ','
                << sy(std::max(0.0, it->mean_cum_regret - it->stderr_cum_regret)) << ' ';
        }
        out << "\"/>\n<polyline fill=\"none\" stroke=\"" << stroke
            << "\" stroke-width=\"2\" points=\"";
        for (const auto& row : series) {
            out << sx(static_cast<double>(row.round)) << ',' << sy(row.mean_cum_regret) << ' ';
        }
        out << "\"/>\n";
        const double ly = top + 16.0 + 18.0 * static_cast<double>(color);
        out << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\""
            << left + plot_w + 36 << "\" y2=\"" << ly << "\" stroke=\"" << stroke
            << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << left + plot_w + 42 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(name)
            << "</text>\n";
        ++color;
    }
    out << "</svg>\n";
}

void emit_svg(const ResultTable& table, const std::filesystem::path& path,
              const std::string& title) {
    if (table.rows.empty()) throw std::invalid_argument("empty result table");
    auto out = open_output(path);
    emit_svg(table, out, title);
}

void emit_metadata(const ResultMetadata& metadata, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["config_hash"] = metadata.config_hash;
    doc["seed"] = metadata.seed;
    doc["git_describe"] = metadata.git_describe;
    doc["wall_seconds"] = metadata.wall_seconds;
    auto diags = nlohmann::json::array();
    for (const auto& d : metadata.diagnostics) {
        diags.push_back({{"replication", d.replication},
                         {"algorithm", d.algorithm},
                         {"message", d.message}});
    }
    doc["diagnostics"] = std::move(diags);
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
}

}  // namespace cascade
