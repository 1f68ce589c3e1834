#include "cascade/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cascade/policy.hpp"

namespace cascade {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& value) {
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < value.size(); ++i) {
            if (value[i] == '\\' && i + 2 < value.size()) ++i;
            out.push_back(value[i]);
        }
        return out;
    }
    return value;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(strip_comment(line));
        if (text.empty()) continue;
        if (text.front() == '[' && text.back() == ']' && text.find('=') == std::string::npos) {
            section = trim(text.substr(1, text.size() - 2));
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(text.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        cfg.set(key, trim(text.substr(eq + 1)));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    return parse(in);
}

void KeyValueConfig::set(const std::string& key, const std::string& raw_value) {
    values_[key] = trim(raw_value);
}

void KeyValueConfig::set_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : unquote(it->second);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string v = unquote(it->second);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

long KeyValueConfig::get_long(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = unquote(it->second);
    v.erase(std::remove(v.begin(), v.end(), '_'), v.end());
    long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'");
    }
    return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string v = unquote(it->second);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key,
                                                  const std::vector<std::string>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = unquote(trim(item));
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string to_string(EnvironmentKind kind) {
    switch (kind) {
        case EnvironmentKind::bernoulli: return "bernoulli";
        case EnvironmentKind::linear: return "linear";
        case EnvironmentKind::logistic: return "logistic";
        case EnvironmentKind::letor: return "letor";
    }
    return "unknown";
}

namespace {

EnvironmentKind parse_env(const std::string& text) {
    if (text == "bernoulli") return EnvironmentKind::bernoulli;
    if (text == "linear") return EnvironmentKind::linear;
    if (text == "logistic") return EnvironmentKind::logistic;
    if (text == "letor") return EnvironmentKind::letor;
    throw ConfigError("unknown environment '" + text + "'");
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "env", "L", "K", "d", "T", "lambda", "replications", "seed", "log_every",
        "parallelism", "algorithms", "strict", "n_inner", "fixed_true_prior", "prior_shift",
        "S", "sigma_sq", "delta", "square_sigma", "sample_scale",
        "glmts.refit_every", "glmts.irls_tol", "glmts.irls_max_iter", "glmts.project",
        "newton.step_size", "newton.sample_scale", "linucb.confidence_scale",
        "gts.prior_mean", "gts.prior_var", "gts.noise_var",
        "linear.feedback", "linear.noise_sd", "linear.threshold", "redraw_features",
        "letor.instances", "letor.queries", "sweep", "sweep_T",
        "output", "plot_output", "svg_output"};
    return keys;
}

}  // namespace

ExperimentConfig ExperimentConfig::from(const KeyValueConfig& kv) {
    for (const auto& [key, value] : kv.values()) {
        if (known_keys().count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
    }
    ExperimentConfig c;
    c.env = parse_env(kv.get_string("env", to_string(c.env)));
    c.L = static_cast<std::size_t>(kv.get_long("L", static_cast<long>(c.L)));
    c.K = static_cast<std::size_t>(kv.get_long("K", static_cast<long>(c.K)));
    c.d = static_cast<int>(kv.get_long("d", c.d));
    c.T = kv.get_long("T", c.T);
    c.lambda = kv.get_double("lambda", c.lambda);
    c.replications = kv.get_long("replications", c.replications);
    c.seed = static_cast<std::uint64_t>(kv.get_long("seed", static_cast<long>(c.seed)));
    c.log_every = kv.get_long("log_every", c.log_every);
    c.parallelism = static_cast<int>(kv.get_long("parallelism", c.parallelism));
    c.algorithms = kv.get_list("algorithms", c.algorithms);
    c.strict = kv.get_bool("strict", c.strict);
    c.n_inner = static_cast<std::size_t>(kv.get_long("n_inner", static_cast<long>(c.n_inner)));
    c.fixed_true_prior = kv.get_bool("fixed_true_prior", c.fixed_true_prior);
    if (kv.contains("prior_shift")) c.prior_shift = static_cast<int>(kv.get_long("prior_shift", 0));
    c.S = kv.get_double("S", c.S);
    c.sigma_sq = kv.get_double("sigma_sq", c.sigma_sq);
    c.delta = kv.get_double("delta", c.delta);
    c.square_sigma = kv.get_bool("square_sigma", c.square_sigma);
    c.sample_scale = kv.get_double("sample_scale", c.sample_scale);
    c.refit_every = static_cast<int>(kv.get_long("glmts.refit_every", c.refit_every));
    c.irls_tol = kv.get_double("glmts.irls_tol", c.irls_tol);
    c.irls_max_iter = static_cast<int>(kv.get_long("glmts.irls_max_iter", c.irls_max_iter));
    c.project_to_ball = kv.get_bool("glmts.project", c.project_to_ball);
    c.newton_step_size = kv.get_double("newton.step_size", c.newton_step_size);
    c.newton_sample_scale = kv.get_double("newton.sample_scale", c.newton_sample_scale);
    c.linucb_confidence_scale = kv.get_double("linucb.confidence_scale", c.linucb_confidence_scale);
    c.gts_prior_mean = kv.get_double("gts.prior_mean", c.gts_prior_mean);
    c.gts_prior_var = kv.get_double("gts.prior_var", c.gts_prior_var);
    c.gts_noise_var = kv.get_double("gts.noise_var", c.gts_noise_var);

    const std::string feedback = kv.get_string("linear.feedback", "bernoulli");
    if (feedback == "bernoulli") {
        c.environment.linear_feedback = LinearFeedbackMode::bernoulli;
    } else if (feedback == "gaussian") {
        c.environment.linear_feedback = LinearFeedbackMode::gaussian;
    } else {
        throw ConfigError("linear.feedback must be bernoulli or gaussian");
    }
    c.environment.noise_sd = kv.get_double("linear.noise_sd", c.environment.noise_sd);
    c.environment.threshold = kv.get_double("linear.threshold", c.environment.threshold);
    c.environment.redraw_features = kv.get_bool("redraw_features", false);

    c.letor_instances = kv.get_string("letor.instances", "");
    c.letor_queries = static_cast<std::size_t>(kv.get_long("letor.queries", 0));

    if (kv.contains("sweep")) {
        c.sweep.clear();
        for (const auto& item : kv.get_list("sweep", {})) {
            KeyValueConfig tmp;
            tmp.set("v", item);
            c.sweep.push_back(static_cast<int>(tmp.get_long("v", 0)));
        }
    }
    c.sweep_T = kv.get_long("sweep_T", c.sweep_T);

    c.output = kv.get_string("output", c.output.string());
    c.plot_output = kv.get_string("plot_output", "");
    c.svg_output = kv.get_string("svg_output", "");
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    if (K == 0) throw ConfigError("K must be positive");
    if (env != EnvironmentKind::letor && K > L) throw ConfigError("K must not exceed L");
    if (T < 1) throw ConfigError("T must be positive");
    if (replications < 1) throw ConfigError("replications must be positive");
    if (log_every < 1) throw ConfigError("log_every must be positive");
    if (parallelism < 1) throw ConfigError("parallelism must be positive");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (n_inner < 1) throw ConfigError("n_inner must be positive");
    if (refit_every < 1) throw ConfigError("glmts.refit_every must be positive");
    if ((env == EnvironmentKind::linear || env == EnvironmentKind::logistic) && d < 1) {
        throw ConfigError("d must be positive for contextual environments");
    }
    if (env == EnvironmentKind::letor && letor_instances.empty()) {
        throw ConfigError("letor environment needs letor.instances");
    }
    if (algorithms.empty()) throw ConfigError("no algorithms configured");
    const auto& names = algorithm_names();
    for (const auto& a : algorithms) {
        if (a != "oracle" && std::find(names.begin(), names.end(), a) == names.end()) {
            throw ConfigError("unknown algorithm '" + a + "'");
        }
        if (env == EnvironmentKind::bernoulli && is_contextual(a)) {
            throw ConfigError("algorithm '" + a + "' needs a contextual environment");
        }
    }
    if (prior_shift && (*prior_shift < 0 || *prior_shift > 8)) {
        throw ConfigError("prior_shift must lie in [0,8]");
    }
    for (int c : sweep) {
        if (c < 0 || c > 8) throw ConfigError("sweep values must lie in [0,8]");
    }
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "env=" << to_string(env) << ";L=" << L << ";K=" << K << ";d=" << d << ";T=" << T
       << ";lambda=" << lambda << ";replications=" << replications << ";seed=" << seed
       << ";log_every=" << log_every << ";algorithms=";
    for (const auto& a : algorithms) os << a << ',';
    os << ";n_inner=" << n_inner << ";fixed_true_prior=" << fixed_true_prior
       << ";prior_shift=" << (prior_shift ? std::to_string(*prior_shift) : "none")
       << ";S=" << S << ";sigma_sq=" << sigma_sq << ";delta=" << delta
       << ";square_sigma=" << square_sigma << ";sample_scale=" << sample_scale
       << ";refit_every=" << refit_every << ";irls_tol=" << irls_tol
       << ";irls_max_iter=" << irls_max_iter << ";project=" << project_to_ball
       << ";newton_step=" << newton_step_size << ";newton_scale=" << newton_sample_scale
       << ";linucb_c=" << linucb_confidence_scale << ";gts=" << gts_prior_mean << ','
       << gts_prior_var << ',' << gts_noise_var
       << ";linear_feedback=" << static_cast<int>(environment.linear_feedback)
       << ";noise_sd=" << environment.noise_sd << ";threshold=" << environment.threshold
       << ";redraw=" << environment.redraw_features << ";letor=" << letor_instances.string()
       << ";letor_queries=" << letor_queries << ";sweep=";
    for (int c : sweep) os << c << ',';
    os << ";sweep_T=" << sweep_T;
    return os.str();
}

std::string ExperimentConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace cascade
