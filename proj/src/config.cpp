#include "sch/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace sch {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key, "cannot parse '" + v + "' as a number");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key, "cannot parse '" + v + "' as an integer");
    }
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool divides(double small, double big, double rel_tol = 1e-9) {
    if (!(small > 0.0) || !(big > 0.0)) return false;
    const double k = std::round(big / small);
    return k >= 1.0 && std::abs(k * small - big) <= rel_tol * big;
}

} // namespace

const char* to_string(Preset p) {
    switch (p) {
        case Preset::test1_temporal: return "test1_temporal";
        case Preset::test1_spatial: return "test1_spatial";
        case Preset::test2: return "test2";
        case Preset::test3: return "test3";
        case Preset::custom: return "custom";
    }
    return "custom";
}

const char* to_string(Study s) {
    switch (s) {
        case Study::temporal: return "temporal";
        case Study::spatial: return "spatial";
        case Study::interface_evolution: return "interface";
    }
    return "temporal";
}

const char* to_string(SkipPolicy s) {
    return s == SkipPolicy::abort ? "abort" : "skip_and_count";
}

const char* to_string(ReferencePolicy r) {
    return r == ReferencePolicy::fine_tau_same_h ? "fine_tau_same_h" : "fine_h_same_tau";
}

Preset parse_preset_name(const std::string& name) {
    std::string n = name;
    std::replace(n.begin(), n.end(), '-', '_');
    if (n == "test1_temporal") return Preset::test1_temporal;
    if (n == "test1_spatial") return Preset::test1_spatial;
    if (n == "test2") return Preset::test2;
    if (n == "test3") return Preset::test3;
    if (n == "custom") return Preset::custom;
    throw ConfigError("preset", "unknown preset '" + name + "'");
}

ExperimentConfig preset_config(Preset p) {
    ExperimentConfig c;
    c.preset = p;
    switch (p) {
        case Preset::test1_temporal:
            // Desk-scale Table 1 study; the paper's h = 2/2^6, M >= 1000 run is
            // reachable by overriding n_ref, M and tau_list.
            c.study = Study::temporal;
            c.epsilon = 0.1;
            c.delta = 5.0;
            c.T = 0.016;
            c.tau_ref = 5e-5;
            c.tau_list = {8e-4, 4e-4, 2e-4, 1e-4};
            c.n_ref = 32;
            c.M = 100;
            c.reference_policy = ReferencePolicy::fine_tau_same_h;
            c.initial_data = "test1_poly";
            break;
        case Preset::test1_spatial:
            // Desk-scale Table 2 study; tau relaxed from the paper's 5e-5.
            c.study = Study::spatial;
            c.epsilon = 0.1;
            c.delta = 25.0;
            c.T = 0.016;
            c.tau_ref = 5e-5;
            c.tau = 2e-4;
            c.n_list = {4, 8, 16};
            c.n_ref = 32;
            c.M = 200;
            c.reference_policy = ReferencePolicy::fine_h_same_tau;
            c.initial_data = "test1_poly";
            break;
        case Preset::test2:
            c.study = Study::interface_evolution;
            c.epsilon = 0.01;
            c.delta = 1.0;
            c.T = 0.01;
            c.tau_ref = 5e-5;
            c.tau = 1e-4;
            c.n_ref = 64;
            c.M = 100;
            c.snapshot_times = {0.002, 0.005, 0.01};
            c.initial_data = "test2_ellipse";
            break;
        case Preset::test3:
            c.study = Study::interface_evolution;
            c.epsilon = 0.01;
            c.delta = 1.0;
            c.T = 0.01;
            c.tau_ref = 5e-5;
            c.tau = 1e-4;
            c.n_ref = 64;
            c.M = 100;
            c.snapshot_times = {0.002, 0.005, 0.01};
            c.initial_data = "test3_two_ellipses";
            break;
        case Preset::custom:
            break;
    }
    return c;
}

void apply_quick(ExperimentConfig& cfg) {
    cfg.M = std::min(cfg.M, 4);
    cfg.n_ref = std::min(cfg.n_ref, 16);
    switch (cfg.study) {
        case Study::temporal:
            if (cfg.tau_list.size() > 2) cfg.tau_list.resize(2);
            if (!cfg.tau_list.empty()) cfg.tau_ref = cfg.tau_list.back() / 4.0;
            break;
        case Study::spatial:
            if (cfg.n_list.size() > 2) cfg.n_list.resize(2);
            cfg.n_ref = cfg.n_list.empty() ? cfg.n_ref : 2 * cfg.n_list.back();
            break;
        case Study::interface_evolution:
            cfg.T = std::min(cfg.T, 16 * cfg.tau);
            for (auto& t : cfg.snapshot_times) t = std::min(t, cfg.T);
            break;
    }
}

namespace {

void apply_key(ExperimentConfig& c, const std::string& key, const std::string& val) {
    if (key == "preset") {
        // handled by the caller
    } else if (key == "study") {
        if (val == "temporal") c.study = Study::temporal;
        else if (val == "spatial") c.study = Study::spatial;
        else if (val == "interface") c.study = Study::interface_evolution;
        else throw ConfigError(key, "expected temporal|spatial|interface");
    } else if (key == "epsilon") c.epsilon = parse_double(key, val);
    else if (key == "delta") c.delta = parse_double(key, val);
    else if (key == "T") c.T = parse_double(key, val);
    else if (key == "tau_ref") c.tau_ref = parse_double(key, val);
    else if (key == "tau") c.tau = parse_double(key, val);
    else if (key == "tau_list") {
        c.tau_list.clear();
        for (const auto& s : split(val, ',')) c.tau_list.push_back(parse_double(key, s));
    } else if (key == "n_list") {
        c.n_list.clear();
        for (const auto& s : split(val, ','))
            c.n_list.push_back(static_cast<int>(parse_int(key, s)));
    } else if (key == "n_ref") c.n_ref = static_cast<int>(parse_int(key, val));
    else if (key == "M") c.M = static_cast<int>(parse_int(key, val));
    else if (key == "master_seed") c.master_seed = static_cast<std::uint64_t>(parse_int(key, val));
    else if (key == "reference_policy") {
        if (val == "fine_tau_same_h") c.reference_policy = ReferencePolicy::fine_tau_same_h;
        else if (val == "fine_h_same_tau") c.reference_policy = ReferencePolicy::fine_h_same_tau;
        else throw ConfigError(key, "expected fine_tau_same_h|fine_h_same_tau");
    } else if (key == "skip_policy") {
        if (val == "abort") c.skip_policy = SkipPolicy::abort;
        else if (val == "skip_and_count") c.skip_policy = SkipPolicy::skip_and_count;
        else throw ConfigError(key, "expected abort|skip_and_count");
    } else if (key == "jobs") c.jobs = static_cast<int>(parse_int(key, val));
    else if (key == "newton_tol") c.newton_tol = parse_double(key, val);
    else if (key == "newton_max_iter") c.newton_max_iter = static_cast<int>(parse_int(key, val));
    else if (key == "mesh_warn_threshold") c.mesh_warn_threshold = parse_double(key, val);
    else if (key == "quad_order") c.quad_order = static_cast<int>(parse_int(key, val));
    else if (key == "snapshots") {
        c.snapshot_times.clear();
        for (const auto& s : split(val, ','))
            c.snapshot_times.push_back(parse_double(key, s));
    } else if (key == "initial_data") c.initial_data = val;
    else if (key == "out_dir") c.out_dir = val;
    else throw ConfigError(key, "unknown key");
}

} // namespace

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");

    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') continue;   // section headers ignored
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config", "line " + std::to_string(lineno) + ": expected key = value");
        pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }

    ExperimentConfig cfg;
    for (const auto& [k, v] : pairs)
        if (k == "preset") cfg = preset_config(parse_preset_name(v));
    for (const auto& [k, v] : pairs)
        if (k != "preset") apply_key(cfg, k, v);
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    if (!(cfg.epsilon > 0)) throw ConfigError("epsilon", "must be positive");
    if (cfg.delta < 0) throw ConfigError("delta", "must be nonnegative");
    if (!(cfg.T > 0)) throw ConfigError("T", "must be positive");
    if (!(cfg.tau_ref > 0)) throw ConfigError("tau_ref", "must be positive");
    if (cfg.M < 1) throw ConfigError("M", "must be >= 1");
    if (cfg.jobs < 0) throw ConfigError("jobs", "must be >= 0");
    if (!(cfg.newton_tol > 0)) throw ConfigError("newton_tol", "must be positive");
    if (cfg.newton_max_iter < 1) throw ConfigError("newton_max_iter", "must be >= 1");
    if (cfg.quad_order < 2) throw ConfigError("quad_order", "must be >= 2");
    if (cfg.n_ref < 1) throw ConfigError("n_ref", "must be >= 1");

    if (cfg.initial_data != "test1_poly" && cfg.initial_data != "test2_ellipse" &&
        cfg.initial_data != "test3_two_ellipses" &&
        cfg.initial_data.rfind("constant:", 0) != 0)
        throw ConfigError("initial_data", "unknown initial data '" + cfg.initial_data + "'");

    switch (cfg.study) {
        case Study::temporal: {
            if (cfg.tau_list.empty()) throw ConfigError("tau_list", "must be nonempty");
            for (double t : cfg.tau_list) {
                if (!divides(cfg.tau_ref, t))
                    throw ConfigError("tau_list",
                                      fmt_double(t) + " is not a multiple of tau_ref");
                if (!divides(t, cfg.T))
                    throw ConfigError("tau_list", fmt_double(t) + " does not divide T");
            }
            for (std::size_t k = 0; k + 1 < cfg.tau_list.size(); ++k)
                if (std::abs(cfg.tau_list[k] / cfg.tau_list[k + 1] - 2.0) > 1e-9)
                    throw ConfigError("tau_list", "ladder must decrease by factor 2");
            break;
        }
        case Study::spatial: {
            if (cfg.n_list.empty()) throw ConfigError("n_list", "must be nonempty");
            for (std::size_t k = 0; k + 1 < cfg.n_list.size(); ++k)
                if (cfg.n_list[k + 1] != 2 * cfg.n_list[k])
                    throw ConfigError("n_list", "ladder must double n (halve h)");
            for (int n : cfg.n_list) {
                if (n < 1) throw ConfigError("n_list", "entries must be >= 1");
                if (cfg.n_ref % n != 0)
                    throw ConfigError("n_ref", "must be a multiple of every ladder n");
            }
            if (cfg.n_ref < 2 * cfg.n_list.back())
                throw ConfigError("n_ref", "must be at least twice the finest ladder n");
            if (!divides(cfg.tau_ref, cfg.tau))
                throw ConfigError("tau", "not a multiple of tau_ref");
            if (!divides(cfg.tau, cfg.T)) throw ConfigError("tau", "does not divide T");
            break;
        }
        case Study::interface_evolution: {
            if (!divides(cfg.tau_ref, cfg.tau))
                throw ConfigError("tau", "not a multiple of tau_ref");
            if (!divides(cfg.tau, cfg.T)) throw ConfigError("tau", "does not divide T");
            for (double t : cfg.snapshot_times)
                if (t < 0 || t > cfg.T * (1 + 1e-9))
                    throw ConfigError("snapshots", "time outside [0, T]");
            break;
        }
    }
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "preset = " << to_string(c.preset) << "\n";
    os << "study = " << to_string(c.study) << "\n";
    os << "epsilon = " << fmt_double(c.epsilon) << "\n";
    os << "delta = " << fmt_double(c.delta) << "\n";
    os << "T = " << fmt_double(c.T) << "\n";
    os << "tau_ref = " << fmt_double(c.tau_ref) << "\n";
    os << "tau = " << fmt_double(c.tau) << "\n";
    os << "tau_list = ";
    for (std::size_t i = 0; i < c.tau_list.size(); ++i)
        os << (i ? "," : "") << fmt_double(c.tau_list[i]);
    os << "\n";
    os << "n_list = ";
    for (std::size_t i = 0; i < c.n_list.size(); ++i) os << (i ? "," : "") << c.n_list[i];
    os << "\n";
    os << "n_ref = " << c.n_ref << "\n";
    os << "M = " << c.M << "\n";
    os << "master_seed = " << c.master_seed << "\n";
    os << "reference_policy = " << to_string(c.reference_policy) << "\n";
    os << "skip_policy = " << to_string(c.skip_policy) << "\n";
    os << "jobs = " << c.jobs << "\n";
    os << "newton_tol = " << fmt_double(c.newton_tol) << "\n";
    os << "newton_max_iter = " << c.newton_max_iter << "\n";
    os << "mesh_warn_threshold = " << fmt_double(c.mesh_warn_threshold) << "\n";
    os << "quad_order = " << c.quad_order << "\n";
    os << "snapshots = ";
    for (std::size_t i = 0; i < c.snapshot_times.size(); ++i)
        os << (i ? "," : "") << fmt_double(c.snapshot_times[i]);
    os << "\n";
    os << "initial_data = " << c.initial_data << "\n";
    os << "out_dir = " << c.out_dir << "\n";
    return os.str();
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string s = serialize_config(cfg);
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(s.data(), s.size())));
    return buf;
}

} // namespace sch
