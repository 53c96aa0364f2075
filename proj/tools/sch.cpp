#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sch/experiment.hpp"
#include "sch/noise.hpp"

namespace fs = std::filesystem;
using namespace sch;

namespace {

constexpr const char* kToolVersion = "sch 0.1.0";

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

struct Overrides {
    std::optional<int> M;
    std::optional<double> epsilon, delta, tau, h, T;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> out_dir, snapshots;
    bool quick = false;
};

ExperimentConfig resolve_config(const std::string& source, const Overrides& ov) {
    ExperimentConfig cfg = fs::exists(source) ? load_config_file(source)
                                              : preset_config(parse_preset_name(source));
    if (ov.M) cfg.M = *ov.M;
    if (ov.epsilon) cfg.epsilon = *ov.epsilon;
    if (ov.delta) cfg.delta = *ov.delta;
    if (ov.T) cfg.T = *ov.T;
    if (ov.seed) cfg.master_seed = *ov.seed;
    if (ov.jobs) cfg.jobs = *ov.jobs;
    if (ov.out_dir) cfg.out_dir = *ov.out_dir;
    if (ov.tau) {
        if (cfg.study == Study::temporal)
            cfg.tau_list = {*ov.tau};
        else
            cfg.tau = *ov.tau;
    }
    if (ov.h) {
        const int n = static_cast<int>(std::llround(2.0 / *ov.h));
        if (n < 1 || std::abs(2.0 / n - *ov.h) > 1e-9 * *ov.h)
            throw ConfigError("h", "expected an axis spacing 2/n");
        cfg.n_ref = n;
    }
    if (ov.snapshots) {
        cfg.snapshot_times.clear();
        std::stringstream ss(*ov.snapshots);
        std::string item;
        while (std::getline(ss, item, ',')) cfg.snapshot_times.push_back(std::stod(item));
    }
    if (ov.quick) apply_quick(cfg);
    return cfg;
}

struct OutputInventory {
    std::vector<std::pair<std::string, fs::path>> files;

    void add(const std::string& name, const fs::path& p) { files.emplace_back(name, p); }
};

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg,
                    const OutputInventory& inv) {
    nlohmann::json j;
    j["tool"] = kToolVersion;
    j["rng"] = rng_id();
    j["normal_sampler"] = normal_sampler_id();
    j["config"] = serialize_config(cfg);
    j["config_hash"] = config_hash(cfg);
    {
        std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        j["generated_at"] = buf;
    }
    j["outputs"] = nlohmann::json::array();
    for (const auto& [name, path] : inv.files) {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        char hex[20];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
        j["outputs"].push_back(
            {{"file", name}, {"bytes", bytes.size()}, {"fnv1a64", hex}});
    }
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << "\n";
    if (!out) throw std::ios_base::failure("cannot write manifest.json");
}

void print_report(const ErrorReport& rep) {
    const char* res = rep.study == Study::temporal ? "tau" : "h";
    std::printf("%12s  %12s %6s  %12s %6s\n", res, "Linf(L2)", "order", "L2(H1)", "order");
    for (std::size_t k = 0; k < rep.rungs.size(); ++k) {
        const auto& r = rep.rungs[k];
        if (k == 0)
            std::printf("%12.4e  %12.4e %6s  %12.4e %6s\n", r.resolution, r.linf_l2, "",
                        r.l2_h1, "");
        else
            std::printf("%12.4e  %12.4e %6.2f  %12.4e %6.2f\n", r.resolution, r.linf_l2,
                        rep.orders_linf_l2.empty() ? 0.0 : rep.orders_linf_l2[k - 1],
                        r.l2_h1,
                        rep.orders_l2_h1.empty() ? 0.0 : rep.orders_l2_h1[k - 1]);
    }
    if (rep.skipped > 0)
        std::printf("skipped realizations: %d%s\n", rep.skipped,
                    rep.valid ? "" : " (report INVALID: > 1%)");
    std::printf("wall: %.1f s\n", rep.wall_seconds);
}

double constraint_indicator(const ExperimentConfig& cfg) {
    const double tau =
        cfg.study == Study::temporal && !cfg.tau_list.empty() ? cfg.tau_list.front() : cfg.tau;
    return tau * (std::pow(cfg.epsilon, -3) +
                  std::pow(cfg.delta, 4) / cfg.epsilon);
}

bool scheme_params_ok(const ExperimentConfig& cfg) {
    return constraint_indicator(cfg) <= cfg.mesh_warn_threshold;
}

int run_command(const std::string& source, const Overrides& ov) {
    ExperimentConfig cfg = resolve_config(source, ov);
    validate_config(cfg);

    if (!scheme_params_ok(cfg))
        std::printf("warning: mesh-constraint indicator tau(eps^-3 + eps^-1 delta^4) = %.3g "
                    "exceeds threshold %.3g\n",
                    constraint_indicator(cfg), cfg.mesh_warn_threshold);

    fs::create_directories(cfg.out_dir);
    OutputInventory inv;

    if (cfg.study == Study::temporal || cfg.study == Study::spatial) {
        ErrorReport rep = estimate_errors(cfg);
        {
            std::ofstream csv(fs::path(cfg.out_dir) / "error_report.csv");
            write_error_report_csv(csv, rep);
            if (!csv) throw std::ios_base::failure("cannot write error_report.csv");
        }
        {
            std::ofstream js(fs::path(cfg.out_dir) / "error_report.json");
            write_error_report_json(js, rep, cfg);
            if (!js) throw std::ios_base::failure("cannot write error_report.json");
        }
        inv.add("error_report.csv", fs::path(cfg.out_dir) / "error_report.csv");
        inv.add("error_report.json", fs::path(cfg.out_dir) / "error_report.json");
        print_report(rep);
        write_manifest(cfg.out_dir, cfg, inv);
        return rep.valid ? 0 : kExitSolver;
    }

    EnergyStudy st = energy_decay_study(cfg);
    {
        std::ofstream out(fs::path(cfg.out_dir) / "energy_series.csv");
        write_series_csv(out, "energy", st.times, st.mean_energy, &st.energy_se);
        if (!out) throw std::ios_base::failure("cannot write energy_series.csv");
    }
    {
        std::ofstream out(fs::path(cfg.out_dir) / "mass_series.csv");
        write_series_csv(out, "mass", st.times, st.mean_mass);
        if (!out) throw std::ios_base::failure("cannot write mass_series.csv");
    }
    {
        std::vector<LevelSet> sets;
        for (std::size_t s = 0; s < st.mean_snapshots.size(); ++s)
            sets.push_back(extract_zero_level_set(*st.mesh, st.mean_snapshots[s],
                                                  st.snapshot_times[s]));
        std::ofstream out(fs::path(cfg.out_dir) / "level_sets.csv");
        write_level_set_csv(out, sets);
        if (!out) throw std::ios_base::failure("cannot write level_sets.csv");
    }
    inv.add("energy_series.csv", fs::path(cfg.out_dir) / "energy_series.csv");
    inv.add("mass_series.csv", fs::path(cfg.out_dir) / "mass_series.csv");
    inv.add("level_sets.csv", fs::path(cfg.out_dir) / "level_sets.csv");
    std::printf("energy(t=0) = %.6g, energy(T) = %.6g, snapshots: %zu\n",
                st.mean_energy.front(), st.mean_energy.back(), st.mean_snapshots.size());
    if (st.skipped > 0)
        std::printf("skipped realizations: %d%s\n", st.skipped,
                    st.valid ? "" : " (INVALID: > 1%)");
    write_manifest(cfg.out_dir, cfg, inv);
    return st.valid ? 0 : kExitSolver;
}

int validate_command(const std::string& source) {
    ExperimentConfig cfg = fs::exists(source) ? load_config_file(source)
                                              : preset_config(parse_preset_name(source));
    validate_config(cfg);
    std::cout << serialize_config(cfg);
    std::printf("config_hash = %s\n", config_hash(cfg).c_str());
    std::printf("mesh_constraint_indicator = %.6g (threshold %.3g)\n",
                constraint_indicator(cfg), cfg.mesh_warn_threshold);

    // Rough resource estimates only; no computation is performed.
    const double N = double(cfg.n_ref + 1) * (cfg.n_ref + 1);
    const double tau_min = cfg.study == Study::temporal && !cfg.tau_list.empty()
                               ? cfg.tau_list.back()
                               : cfg.tau;
    const double steps = cfg.T / cfg.tau_ref + cfg.T / tau_min * 2.0;
    const double per_step = 2.5e-9 * std::pow(N, 1.5);
    const int jobs = cfg.jobs > 0 ? cfg.jobs : 2;
    std::printf("estimated memory ~ %.0f MB, wall ~ %.0f s (rough)\n",
                jobs * (2 * N * 150 * 16) / 1e6, cfg.M * steps * per_step / jobs);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kToolVersion) +
                 " - stochastic Cahn-Hilliard mixed FEM experiments"};
    app.require_subcommand(1);

    std::string source;
    Overrides ov;

    auto* run = app.add_subcommand("run", "run a preset or config file");
    run->add_option("source", source, "preset name or config file")->required();
    run->add_option("--M", ov.M, "Monte Carlo realizations");
    run->add_option("--epsilon", ov.epsilon, "interaction length");
    run->add_option("--delta", ov.delta, "noise intensity");
    run->add_option("--tau", ov.tau, "time step (replaces the ladder for temporal studies)");
    run->add_option("--h", ov.h, "mesh axis spacing 2/n for the (reference) mesh");
    run->add_option("--T", ov.T, "final time");
    run->add_option("--seed", ov.seed, "master seed");
    run->add_option("--jobs", ov.jobs, "worker count (1 = bitwise reproducible)");
    run->add_option("--out-dir", ov.out_dir, "output directory");
    run->add_option("--snapshots", ov.snapshots, "comma-separated snapshot times");
    run->add_flag("--quick", ov.quick, "shrink to smoke-test scale");

    std::string validate_source;
    auto* val = app.add_subcommand("validate", "resolve and check a config; no computation");
    val->add_option("source", validate_source, "preset name or config file")->required();

    int mesh_n = 8;
    std::string mesh_out;
    auto* dm = app.add_subcommand("dump-mesh", "write a plain-text mesh listing");
    dm->add_option("--n", mesh_n, "subdivisions per side")->required();
    dm->add_option("--out", mesh_out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(source, ov);
        if (val->parsed()) return validate_command(validate_source);
        if (dm->parsed()) {
            const Mesh mesh = build_uniform_mesh(mesh_n);
            if (mesh_out.empty()) {
                dump_mesh(mesh, std::cout);
            } else {
                std::ofstream out(mesh_out);
                dump_mesh(mesh, out);
                if (!out) throw std::ios_base::failure("cannot write " + mesh_out);
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error%s: %s\n",
                     e.step_index >= 0 ? (" at step " + std::to_string(e.step_index)).c_str()
                                       : "",
                     e.what());
        return kExitSolver;
    } catch (const std::ios_base::failure& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
