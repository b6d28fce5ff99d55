#include "expile/config.hpp"

#include "expile/examples.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace expile {

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds = {
        "piling-law",       "extremal-index", "empirical-piling",
        "tail",             "functional-limit", "dependence-bounds",
    };
    return kinds;
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw SpecError("config line " + std::to_string(line) + ": " + what);
}

long long parse_int(const std::string& v, int line) {
    size_t pos = 0;
    long long out;
    try {
        out = std::stoll(v, &pos);
    } catch (...) {
        fail(line, "expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) fail(line, "trailing characters after integer '" + v + "'");
    return out;
}

double parse_number(const std::string& v, int line) {
    auto q = parse_quad(v);
    if (!q) fail(line, "cannot parse numeric value '" + v + "'");
    return q->to_double();
}

// accumulated [custom] keys; the spec is assembled once the file is read
struct CustomBlock {
    std::vector<int> slopes;
    std::vector<SeedCoord> zeta;
    std::vector<long long> offsets;
    std::vector<Quad> weights;
    std::vector<long long> mult;
    std::vector<double> radii;
    std::vector<Rational> alphas;
    std::string mode = "non-periodic";
    long long period = 0;
    long long countable_base = 3;
    std::optional<Rational> countable_ratio;
    bool touched = false;
};

void custom_key(CustomBlock& c, const std::string& key, const std::string& value, int line) {
    c.touched = true;
    auto toks = split_ws(value);
    if (toks.empty()) fail(line, "empty value for '" + key + "'");
    if (key == "slopes") {
        for (const auto& t : toks) c.slopes.push_back((int)parse_int(t, line));
    } else if (key == "zeta") {
        for (const auto& t : toks) {
            auto s = parse_seed(t);
            if (!s) fail(line, "cannot parse seed '" + t + "'");
            c.zeta.push_back(*s);
        }
    } else if (key == "offsets") {
        for (const auto& t : toks) c.offsets.push_back(parse_int(t, line));
    } else if (key == "weights") {
        for (const auto& t : toks) {
            auto q = parse_quad(t);
            if (!q) fail(line, "cannot parse weight '" + t + "'");
            c.weights.push_back(*q);
        }
    } else if (key == "multiplicities") {
        for (const auto& t : toks) c.mult.push_back(parse_int(t, line));
    } else if (key == "radii") {
        for (const auto& t : toks) c.radii.push_back(parse_number(t, line));
    } else if (key == "alpha") {
        for (const auto& t : toks) {
            auto q = parse_quad(t);
            if (!q || !q->is_rational()) fail(line, "alpha must be rational, got '" + t + "'");
            c.alphas.push_back(q->rat_part());
        }
    } else if (key == "mode") {
        c.mode = toks[0];
    } else if (key == "period") {
        c.period = parse_int(toks[0], line);
    } else if (key == "countable_base") {
        c.countable_base = parse_int(toks[0], line);
    } else if (key == "countable_ratio") {
        auto q = parse_quad(toks[0]);
        if (!q || !q->is_rational()) fail(line, "countable_ratio must be rational");
        c.countable_ratio = q->rat_part();
    } else {
        fail(line, "unknown custom key '" + key + "'");
    }
}

MaximalSetSpec build_custom(const CustomBlock& c) {
    MaximalSetSpec s;
    s.name = "custom";
    if (c.slopes.empty()) throw SpecError("custom spec needs 'slopes'");
    s.map.slopes = c.slopes;
    if (c.zeta.size() != c.slopes.size())
        throw SpecError("custom spec needs one zeta coordinate per slope");
    s.zeta = c.zeta;
    if (c.alphas.empty()) throw SpecError("custom spec needs 'alpha'");
    validate_tail_indices(c.alphas);
    s.alpha = c.alphas[0];
    if (c.offsets.empty()) throw SpecError("custom spec needs 'offsets'");
    if (!c.weights.empty() && c.weights.size() != c.offsets.size())
        throw SpecError("weights and offsets must have equal length");
    if (!c.mult.empty() && c.mult.size() != c.offsets.size())
        throw SpecError("multiplicities and offsets must have equal length");
    if (!c.radii.empty() && c.radii.size() != c.offsets.size())
        throw SpecError("radii and offsets must have equal length");
    for (size_t i = 0; i < c.offsets.size(); ++i) {
        BallSpec b;
        b.m = c.offsets[i];
        b.c = c.weights.empty() ? Quad(1) : c.weights[i];
        b.D = c.mult.empty() ? 1 : c.mult[i];
        b.eps = c.radii.empty() ? 0 : c.radii[i];
        s.balls.push_back(b);
    }
    if (c.mode == "non-periodic") {
        s.mode = SetMode::NonPeriodic;
    } else if (c.mode == "periodic") {
        s.mode = SetMode::Periodic;
        s.period = c.period;
    } else if (c.mode == "countable") {
        s.mode = SetMode::Countable;
        CountableGen g;
        g.power_base = c.countable_base;
        if (c.countable_ratio) g.c_ratio = *c.countable_ratio;
        s.countable = g;
    } else {
        throw SpecError("unknown mode '" + c.mode + "'");
    }
    s.finalize();
    return s;
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    CustomBlock custom;
    std::string section;
    bool have_kind = false;

    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::string s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "budgets" && section != "params" && section != "custom")
                fail(line, "unknown section [" + section + "]");
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos) fail(line, "expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty() || value.empty()) fail(line, "empty key or value");

        if (section.empty()) {
            if (key == "kind") {
                const auto& kinds = experiment_kinds();
                if (std::find(kinds.begin(), kinds.end(), value) == kinds.end())
                    fail(line, "unknown kind '" + value + "'");
                cfg.kind = value;
                have_kind = true;
            } else if (key == "example") {
                if (value != "custom" && !is_example_id(value))
                    fail(line, "unknown example id '" + value + "'");
                cfg.example = value;
            } else if (key == "seed") {
                cfg.seed = (uint64_t)parse_int(value, line);
            } else if (key == "output") {
                cfg.output_dir = value;
            } else {
                fail(line, "unknown key '" + key + "'");
            }
        } else if (section == "budgets") {
            if (key == "n") cfg.n = parse_int(value, line);
            else if (key == "trials") cfg.trials = parse_int(value, line);
            else if (key == "clusters") cfg.clusters = parse_int(value, line);
            else fail(line, "unknown budget key '" + key + "'");
        } else if (section == "params") {
            if (key == "tau") cfg.tau = parse_number(value, line);
            else if (key == "q_n") cfg.q_n = parse_int(value, line);
            else if (key == "eps") cfg.eps = parse_number(value, line);
            else if (key == "threads") cfg.threads = (int)parse_int(value, line);
            else fail(line, "unknown param key '" + key + "'");
        } else {
            custom_key(custom, key, value, line);
        }
    }

    if (!have_kind) throw SpecError("config is missing 'kind'");
    if (cfg.example == "custom") {
        if (!custom.touched) throw SpecError("example = custom requires a [custom] section");
        cfg.custom = build_custom(custom);
    } else if (custom.touched) {
        throw SpecError("[custom] section given but example is '" + cfg.example + "'");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

MaximalSetSpec resolve_spec(const ExperimentConfig& cfg) {
    if (cfg.example == "custom") return cfg.custom;
    return example_spec(cfg.example);
}

} // namespace expile
