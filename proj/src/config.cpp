#include "proxsamp/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "proxsamp/errors.hpp"

namespace proxsamp {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& source, int line, const std::string& key,
                    const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail(source, line, "key '" + key + "' expects a number, got '" + value + "'");
    }
}

std::int64_t parse_int(const std::string& source, int line, const std::string& key,
                       const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail(source, line, "key '" + key + "' expects an integer, got '" + value + "'");
    }
}

Vec parse_vector(const std::string& source, int line, const std::string& key,
                 const std::string& value) {
    Vec out;
    std::string token;
    std::string normalized = value;
    for (char& c : normalized)
        if (c == ',') c = ' ';
    std::istringstream in(normalized);
    while (in >> token) out.push_back(parse_double(source, line, key, token));
    if (out.empty()) fail(source, line, "key '" + key + "' expects at least one number");
    return out;
}

std::vector<Vec> parse_matrix(const std::string& source, int line, const std::string& key,
                              const std::string& value) {
    std::vector<Vec> rows;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t end = value.find(';', start);
        if (end == std::string::npos) end = value.size();
        const std::string row = trim(value.substr(start, end - start));
        if (!row.empty()) rows.push_back(parse_vector(source, line, key, row));
        start = end + 1;
    }
    if (rows.empty()) fail(source, line, "key '" + key + "' expects at least one row");
    return rows;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_vector(const Vec& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i != 0) out += " ";
        out += format_double(v[i]);
    }
    return out;
}

std::string format_matrix(const std::vector<Vec>& rows) {
    std::string out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i != 0) out += "; ";
        out += format_vector(rows[i]);
    }
    return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source) {
    RunConfig config;
    std::istringstream stream(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    bool target_d_set = false;

    while (std::getline(stream, raw)) {
        ++line_no;
        std::string line = raw;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(source, line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "target" && section != "schedule" && section != "run")
                fail(source, line_no, "unknown section '" + section + "'");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(source, line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(source, line_no, "empty key");
        if (value.empty()) fail(source, line_no, "key '" + key + "' has an empty value");

        if (section == "target") {
            if (key == "kind") {
                config.target.kind = value;
            } else if (key == "d") {
                const std::int64_t d = parse_int(source, line_no, key, value);
                if (d < 1) fail(source, line_no, "key 'd' must be >= 1");
                config.target.d = static_cast<std::size_t>(d);
                target_d_set = true;
            } else if (key == "M") {
                config.target.M = parse_double(source, line_no, key, value);
            } else if (key == "threshold") {
                config.target.threshold = parse_double(source, line_no, key, value);
            } else if (key == "A") {
                config.target.A = parse_matrix(source, line_no, key, value);
            } else if (key == "b") {
                config.target.b = parse_vector(source, line_no, key, value);
            } else if (key == "S") {
                config.target.S = parse_matrix(source, line_no, key, value);
            } else if (key == "x0") {
                config.target.x0 = parse_vector(source, line_no, key, value);
            } else {
                fail(source, line_no, "unknown key '" + key + "' in [target]");
            }
        } else if (section == "schedule") {
            if (key == "eps") {
                config.schedule.eps = parse_double(source, line_no, key, value);
            } else if (key == "mu") {
                config.schedule.mu = parse_double(source, line_no, key, value);
            } else if (key == "eta") {
                config.schedule.eta = parse_double(source, line_no, key, value);
            } else if (key == "delta") {
                config.schedule.delta = parse_double(source, line_no, key, value);
            } else if (key == "T") {
                config.schedule.T = parse_int(source, line_no, key, value);
            } else if (key == "m4") {
                config.schedule.m4 = parse_double(source, line_no, key, value);
            } else if (key == "c_T") {
                config.schedule.c_T = parse_double(source, line_no, key, value);
            } else if (key == "x_min") {
                config.schedule.x_min = parse_vector(source, line_no, key, value);
            } else if (key == "cut_policy") {
                if (value == "minimal")
                    config.schedule.cut_policy = CutPolicy::minimal;
                else if (value == "full")
                    config.schedule.cut_policy = CutPolicy::full;
                else
                    fail(source, line_no, "key 'cut_policy' must be 'minimal' or 'full'");
            } else if (key == "thinning") {
                config.schedule.thinning = parse_int(source, line_no, key, value);
                if (config.schedule.thinning < 1)
                    fail(source, line_no, "key 'thinning' must be >= 1");
            } else {
                fail(source, line_no, "unknown key '" + key + "' in [schedule]");
            }
        } else if (section == "run") {
            if (key == "seed") {
                config.seed = static_cast<std::uint64_t>(parse_int(source, line_no, key, value));
            } else if (key == "n_samples") {
                config.n_samples = parse_int(source, line_no, key, value);
                if (config.n_samples < 0)
                    fail(source, line_no, "key 'n_samples' must be >= 0");
            } else if (key == "chains") {
                config.chains = parse_int(source, line_no, key, value);
                if (config.chains < 1) fail(source, line_no, "key 'chains' must be >= 1");
            } else if (key == "out") {
                config.out_dir = value;
            } else {
                fail(source, line_no, "unknown key '" + key + "' in [run]");
            }
        } else {
            fail(source, line_no, "key '" + key + "' appears before any [section]");
        }
    }

    if (config.target.kind.empty()) throw ConfigError(source + ": missing key 'target.kind'");

    // derive/validate the dimension
    std::size_t d = config.target.d;
    if (!target_d_set) {
        if (!config.target.A.empty())
            d = config.target.A.front().size();
        else if (!config.target.S.empty())
            d = config.target.S.size();
        else if (!config.target.x0.empty())
            d = config.target.x0.size();
        else
            d = 1;
        config.target.d = d;
    }
    if (config.target.x0.empty()) {
        config.target.x0.assign(config.target.d, 0.0);
    } else if (config.target.x0.size() == 1 && config.target.d > 1) {
        config.target.x0.assign(config.target.d, config.target.x0[0]);
    } else if (config.target.x0.size() != config.target.d) {
        throw ConfigError(source + ": key 'target.x0' has " +
                          std::to_string(config.target.x0.size()) + " entries but d = " +
                          std::to_string(config.target.d));
    }
    return config;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

std::string serialize_config(const RunConfig& config) {
    std::ostringstream out;
    out << "[target]\n";
    out << "kind = " << config.target.kind << "\n";
    out << "d = " << config.target.d << "\n";
    if (config.target.M) out << "M = " << format_double(*config.target.M) << "\n";
    if (config.target.threshold)
        out << "threshold = " << format_double(*config.target.threshold) << "\n";
    if (!config.target.A.empty()) out << "A = " << format_matrix(config.target.A) << "\n";
    if (!config.target.b.empty()) out << "b = " << format_vector(config.target.b) << "\n";
    if (!config.target.S.empty()) out << "S = " << format_matrix(config.target.S) << "\n";
    out << "x0 = " << format_vector(config.target.x0) << "\n";

    out << "\n[schedule]\n";
    if (config.schedule.eps) out << "eps = " << format_double(*config.schedule.eps) << "\n";
    if (config.schedule.mu) out << "mu = " << format_double(*config.schedule.mu) << "\n";
    if (config.schedule.eta) out << "eta = " << format_double(*config.schedule.eta) << "\n";
    if (config.schedule.delta) out << "delta = " << format_double(*config.schedule.delta) << "\n";
    if (config.schedule.T) out << "T = " << *config.schedule.T << "\n";
    if (config.schedule.m4) out << "m4 = " << format_double(*config.schedule.m4) << "\n";
    if (config.schedule.c_T) out << "c_T = " << format_double(*config.schedule.c_T) << "\n";
    if (config.schedule.x_min) out << "x_min = " << format_vector(*config.schedule.x_min) << "\n";
    out << "cut_policy = "
        << (config.schedule.cut_policy == CutPolicy::minimal ? "minimal" : "full") << "\n";
    out << "thinning = " << config.schedule.thinning << "\n";

    out << "\n[run]\n";
    out << "seed = " << config.seed << "\n";
    out << "n_samples = " << config.n_samples << "\n";
    out << "chains = " << config.chains << "\n";
    out << "out = " << config.out_dir << "\n";
    return out.str();
}

Potential build_target(const TargetSpec& target) {
    const auto require_M = [&]() -> double {
        if (!target.M)
            throw ConfigError("key 'target.M' is required for kind '" + target.kind + "'");
        return *target.M;
    };

    if (target.kind == "zero") {
        return make_zero();
    }
    if (target.kind == "l1") {
        return make_l1(require_M(), target.d);
    }
    if (target.kind == "l2norm") {
        return make_l2norm(require_M());
    }
    if (target.kind == "max_affine") {
        if (target.A.empty()) throw ConfigError("key 'target.A' is required for kind 'max_affine'");
        Vec offsets = target.b;
        if (offsets.empty()) offsets.assign(target.A.size(), 0.0);
        if (offsets.size() != target.A.size())
            throw ConfigError("key 'target.b' must have one entry per row of 'target.A'");
        for (const Vec& row : target.A)
            if (row.size() != target.d)
                throw ConfigError("rows of 'target.A' must have d = " + std::to_string(target.d) +
                                  " entries");
        return make_max_affine(target.A, offsets);
    }
    if (target.kind == "quadratic") {
        if (target.S.empty()) throw ConfigError("key 'target.S' is required for kind 'quadratic'");
        if (target.S.size() != target.d)
            throw ConfigError("key 'target.S' must be a d x d matrix with d = " +
                              std::to_string(target.d));
        return make_quadratic(target.S);
    }
    if (target.kind == "huber") {
        if (!target.threshold)
            throw ConfigError("key 'target.threshold' is required for kind 'huber'");
        return make_huber(require_M(), *target.threshold);
    }
    throw ConfigError("unknown target.kind '" + target.kind + "'");
}

Schedule resolve_schedule(const RunConfig& config, const Potential& f) {
    const ScheduleSpec& s = config.schedule;
    const std::size_t d = config.target.d;
    const double eps = s.eps.value_or(0.1);
    const double c_T = s.c_T.value_or(2.0);

    const bool any_manual = s.eta.has_value() || s.T.has_value();
    if (any_manual) {
        if (!s.eta) throw ConfigError("manual schedule: key 'schedule.eta' is missing");
        if (!s.T) throw ConfigError("manual schedule: key 'schedule.T' is missing");
        if (!s.mu) throw ConfigError("manual schedule: key 'schedule.mu' is missing");
        const double delta = s.delta.value_or(f.has_prox() ? 0.0 : -1.0);
        if (delta < 0.0) throw ConfigError("manual schedule: key 'schedule.delta' is missing");
        return Schedule::validated(*s.eta, *s.mu, delta, *s.T, eps, d, f);
    }

    double mu;
    double eps_chain = eps;
    if (s.mu) {
        mu = *s.mu;
    } else if (s.m4) {
        if (!f.lipschitz_M || *f.lipschitz_M <= 0.0)
            throw ConfigError("schedule.m4 (convex rule) needs a Lipschitz target with M > 0");
        const Vec x_min = s.x_min.value_or(Vec(d, 0.0));
        if (x_min.size() != d) throw ConfigError("key 'schedule.x_min' has the wrong dimension");
        if (*s.m4 <= 0.0) throw ConfigError("key 'schedule.m4' must be positive");
        const double shift = dist2(config.target.x0, x_min);
        mu = eps / (std::sqrt(2.0) * (std::sqrt(*s.m4) + shift));
        eps_chain = eps / 2.0;
    } else {
        throw ConfigError("schedule needs either 'schedule.mu' or 'schedule.m4'");
    }

    if (f.lipschitz_M && *f.lipschitz_M > 0.0) {
        return Schedule::strongly_convex(d, eps_chain, mu, *f.lipschitz_M, s.delta, c_T);
    }
    if (f.smooth_L && *f.smooth_L > 0.0) {
        return Schedule::smooth(d, eps_chain, mu, *f.smooth_L, s.delta.value_or(1e-6), c_T);
    }
    if (f.has_prox()) {
        // flat potentials (f == 0): every window is vacuous, eta = 1/mu
        if (mu <= 0.0) throw ConfigError("schedule.mu must be positive for a flat target");
        const double eta = 1.0 / mu;
        return Schedule::validated(eta, mu, 0.0, schedule_T(d, eps_chain, eta, mu, c_T),
                                   eps_chain, d, f);
    }
    throw ConfigError("no schedule family applies to this target");
}

}  // namespace proxsamp
