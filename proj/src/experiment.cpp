#include "sch/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "sch/noise.hpp"

namespace sch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Runs body(m) for m = 0..M-1 on a worker pool; results must be written to
// per-realization slots so the later reduction is order-deterministic.
void parallel_realizations(int M, int jobs, const std::function<void(int)>& body) {
    jobs = std::min(resolve_jobs(jobs), M);
    if (jobs <= 1) {
        for (int m = 0; m < M; ++m) body(m);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (int m = next.fetch_add(1); m < M; m = next.fetch_add(1)) body(m);
        });
    for (auto& th : pool) th.join();
}

// P1 interpolation from a coarse uniform mesh onto a nested finer one; exact
// because the meshes share diagonal directions.
struct Prolongation {
    int n_c = 0, n_f = 0, r = 1;

    Prolongation(int coarse_n, int fine_n) : n_c(coarse_n), n_f(fine_n), r(fine_n / coarse_n) {
        if (fine_n % coarse_n != 0)
            throw std::invalid_argument("Prolongation: meshes are not nested");
    }

    Field apply(const Field& coarse) const {
        const int npc = n_c + 1, npf = n_f + 1;
        Field fine(npf * npf);
        for (int jf = 0; jf < npf; ++jf) {
            int jc = jf / r, jy = jf % r;
            if (jc == n_c) { jc--; jy = r; }
            for (int if_ = 0; if_ < npf; ++if_) {
                int ic = if_ / r, ix = if_ % r;
                if (ic == n_c) { ic--; ix = r; }
                const double fx = double(ix) / r, fy = double(jy) / r;
                const double u00 = coarse[jc * npc + ic];
                const double u10 = coarse[jc * npc + ic + 1];
                const double u01 = coarse[(jc + 1) * npc + ic];
                const double u11 = coarse[(jc + 1) * npc + ic + 1];
                fine[jf * npf + if_] = (fx >= fy)
                                           ? u00 * (1 - fx) + u10 * (fx - fy) + u11 * fy
                                           : u00 * (1 - fy) + u01 * (fy - fx) + u11 * fx;
            }
        }
        return fine;
    }
};

struct RealizationData {
    bool ok = true;
    std::string error;
    int failed_step = -1;
    std::vector<std::vector<double>> l2sq;    // [rung][coarse step - 1]
    std::vector<std::vector<double>> hm1sq;
    std::vector<double> h1int;                // [rung]
    std::vector<double> wall;                 // [rung] incl. share of ref run
};

struct SeriesAcc {
    std::vector<double> sum, sumsq;
    explicit SeriesAcc(std::size_t n) : sum(n, 0.0), sumsq(n, 0.0) {}
    void add(const std::vector<double>& x) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            sum[i] += x[i];
            sumsq[i] += x[i] * x[i];
        }
    }
};

struct MeanSe {
    double value = 0.0, se = 0.0;
};

// sqrt of the MC mean with the delta-method standard error.
MeanSe sqrt_of_mean(double sum, double sumsq, int m) {
    MeanSe r;
    const double mean = sum / m;
    r.value = std::sqrt(std::max(0.0, mean));
    if (m > 1 && r.value > 0.0) {
        const double var = std::max(0.0, (sumsq - sum * sum / m) / (m - 1));
        r.se = std::sqrt(var / m) / (2.0 * r.value);
    }
    return r;
}

SchemeParams scheme_params(const ExperimentConfig& cfg, double tau) {
    SchemeParams p;
    p.epsilon = cfg.epsilon;
    p.delta = cfg.delta;
    p.tau = tau;
    p.T = cfg.T;
    p.newton_tol = cfg.newton_tol;
    p.newton_max_iter = cfg.newton_max_iter;
    p.mesh_constraint_threshold = cfg.mesh_warn_threshold;
    return p;
}

void finalize_report(ErrorReport& rep, const ExperimentConfig& cfg,
                     const std::vector<RealizationData>& data,
                     const std::vector<SeriesAcc>& l2_acc,
                     const std::vector<SeriesAcc>& hm1_acc,
                     const std::vector<SeriesAcc>& h1_acc) {
    int m_eff = 0;
    for (const auto& d : data) {
        if (d.ok) {
            ++m_eff;
        } else {
            ++rep.skipped;
            if (cfg.skip_policy == SkipPolicy::abort) {
                SolverError err(d.error);
                err.step_index = d.failed_step;
                throw err;
            }
        }
    }
    if (m_eff == 0) throw SolverError("estimate_errors: every realization failed");
    rep.valid = rep.skipped * 100 <= cfg.M;   // > 1% of M invalidates

    for (std::size_t k = 0; k < rep.rungs.size(); ++k) {
        auto& rung = rep.rungs[k];
        std::size_t arg_l2 = 0, arg_hm1 = 0;
        for (std::size_t i = 1; i < l2_acc[k].sum.size(); ++i) {
            if (l2_acc[k].sum[i] > l2_acc[k].sum[arg_l2]) arg_l2 = i;
            if (hm1_acc[k].sum[i] > hm1_acc[k].sum[arg_hm1]) arg_hm1 = i;
        }
        const MeanSe l2 = sqrt_of_mean(l2_acc[k].sum[arg_l2], l2_acc[k].sumsq[arg_l2], m_eff);
        const MeanSe h1 = sqrt_of_mean(h1_acc[k].sum[0], h1_acc[k].sumsq[0], m_eff);
        const MeanSe hm1 =
            sqrt_of_mean(hm1_acc[k].sum[arg_hm1], hm1_acc[k].sumsq[arg_hm1], m_eff);
        rung.linf_l2 = l2.value;
        rung.linf_l2_se = l2.se;
        rung.l2_h1 = h1.value;
        rung.l2_h1_se = h1.se;
        rung.hm1 = hm1.value;
        rung.hm1_se = hm1.se;
        double w = 0.0;
        for (const auto& d : data)
            if (d.ok) w += d.wall[k];
        rung.wall_seconds = w;
    }

    auto safe_orders = [](auto getter, const std::vector<RungResult>& rungs) {
        std::vector<double> e;
        for (const auto& r : rungs) e.push_back(getter(r));
        if (e.size() < 2) return std::vector<double>{};
        for (double v : e)
            if (!(v > 0)) return std::vector<double>{};
        return fit_orders(e);
    };
    rep.orders_linf_l2 =
        safe_orders([](const RungResult& r) { return r.linf_l2; }, rep.rungs);
    rep.orders_l2_h1 = safe_orders([](const RungResult& r) { return r.l2_h1; }, rep.rungs);
    rep.orders_hm1 = safe_orders([](const RungResult& r) { return r.hm1; }, rep.rungs);
}

} // namespace

ScalarField make_initial_data(const ExperimentConfig& cfg) {
    if (cfg.initial_data == "test1_poly") return initial_data_test1();
    if (cfg.initial_data == "test2_ellipse") return initial_data_test2(cfg.epsilon);
    if (cfg.initial_data == "test3_two_ellipses") return initial_data_test3(cfg.epsilon);
    if (cfg.initial_data.rfind("constant:", 0) == 0) {
        const double c = std::stod(cfg.initial_data.substr(9));
        return [c](const Vec2&) { return c; };
    }
    throw ConfigError("initial_data", "unknown initial data '" + cfg.initial_data + "'");
}

std::vector<double> fit_orders(const std::vector<double>& errors) {
    if (errors.size() < 2)
        throw std::invalid_argument("fit_orders: need at least two rungs");
    for (double e : errors)
        if (!(e > 0.0)) throw std::invalid_argument("fit_orders: errors must be positive");
    std::vector<double> orders;
    orders.reserve(errors.size() - 1);
    for (std::size_t k = 0; k + 1 < errors.size(); ++k)
        orders.push_back(std::log2(errors[k] / errors[k + 1]));
    return orders;
}

ErrorReport estimate_errors(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const auto t0 = Clock::now();

    ErrorReport rep;
    rep.study = cfg.study;
    rep.master_seed = cfg.master_seed;
    rep.config_hash = config_hash(cfg);

    const ScalarField u0_fn = make_initial_data(cfg);

    if (cfg.study == Study::temporal) {
        const Mesh mesh = build_uniform_mesh(cfg.n_ref);
        const VectorFieldX X{};
        const auto ops = build_operators(mesh, &X, cfg.quad_order);
        const Field u0 = project_initial(*ops, u0_fn);

        const auto n_rungs = cfg.tau_list.size();
        const double tau_min = cfg.tau_list.back();
        const auto ref_stride =
            static_cast<int>(std::llround(tau_min / cfg.tau_ref));
        const auto n_compare = static_cast<int>(std::llround(cfg.T / tau_min));

        rep.mesh_constraint_warning =
            !scheme_params(cfg, cfg.tau_list.front()).mesh_constraint_ok();

        std::vector<int> steps_per_rung(n_rungs), stride_per_rung(n_rungs);
        for (std::size_t k = 0; k < n_rungs; ++k) {
            steps_per_rung[k] = static_cast<int>(std::llround(cfg.T / cfg.tau_list[k]));
            stride_per_rung[k] = static_cast<int>(std::llround(cfg.tau_list[k] / tau_min));
            RungResult r;
            r.tau = cfg.tau_list[k];
            r.n = cfg.n_ref;
            r.h_axis = mesh.axis_spacing;
            r.resolution = r.tau;
            rep.rungs.push_back(r);
        }

        std::vector<RealizationData> data(cfg.M);
        parallel_realizations(cfg.M, cfg.jobs, [&](int m) {
            auto& d = data[m];
            d.l2sq.resize(n_rungs);
            d.hm1sq.resize(n_rungs);
            d.h1int.assign(n_rungs, 0.0);
            d.wall.assign(n_rungs, 0.0);
            try {
                const auto tr0 = Clock::now();
                const BrownianPath path =
                    generate_path(cfg.master_seed, static_cast<std::uint64_t>(m), cfg.T,
                                  cfg.tau_ref);

                std::vector<Field> ref(n_compare);
                Stepper ref_stepper(*ops, scheme_params(cfg, cfg.tau_ref));
                RunOptions ref_opts;
                ref_opts.track_energy = false;
                ref_opts.on_step = [&](int n, double, const Field& u, const Field&) {
                    if (n % ref_stride == 0) ref[n / ref_stride - 1] = u;
                };
                ref_stepper.run_path(u0, path.increments, ref_opts);
                const double ref_wall = seconds_since(tr0);

                for (std::size_t k = 0; k < n_rungs; ++k) {
                    const auto tk0 = Clock::now();
                    const auto inc = coarsen(path, cfg.tau_list[k]);
                    d.l2sq[k].assign(steps_per_rung[k], 0.0);
                    d.hm1sq[k].assign(steps_per_rung[k], 0.0);
                    Stepper stepper(*ops, scheme_params(cfg, cfg.tau_list[k]));
                    RunOptions opts;
                    opts.track_energy = false;
                    opts.on_step = [&](int n, double, const Field& u, const Field&) {
                        const Field E = u - ref[std::size_t(n) * stride_per_rung[k] - 1];
                        d.l2sq[k][n - 1] = E.dot(ops->M.mat * E);
                        d.h1int[k] += cfg.tau_list[k] * E.dot(ops->A.mat * E);
                        const double hm1 = h_minus1_norm(*ops, E);
                        d.hm1sq[k][n - 1] = hm1 * hm1;
                    };
                    stepper.run_path(u0, inc, opts);
                    d.wall[k] = seconds_since(tk0) + ref_wall / double(n_rungs);
                }
            } catch (const SolverError& e) {
                d.ok = false;
                d.error = e.what();
                d.failed_step = e.step_index;
            }
        });

        std::vector<SeriesAcc> l2_acc, hm1_acc, h1_acc;
        for (std::size_t k = 0; k < n_rungs; ++k) {
            l2_acc.emplace_back(steps_per_rung[k]);
            hm1_acc.emplace_back(steps_per_rung[k]);
            h1_acc.emplace_back(1);
        }
        for (const auto& d : data) {
            if (!d.ok) continue;
            for (std::size_t k = 0; k < n_rungs; ++k) {
                l2_acc[k].add(d.l2sq[k]);
                hm1_acc[k].add(d.hm1sq[k]);
                h1_acc[k].add({d.h1int[k]});
            }
        }
        finalize_report(rep, cfg, data, l2_acc, hm1_acc, h1_acc);
    } else if (cfg.study == Study::spatial) {
        const VectorFieldX X{};
        const Mesh ref_mesh = build_uniform_mesh(cfg.n_ref);
        const auto ref_ops = build_operators(ref_mesh, &X, cfg.quad_order);
        const Field ref_u0 = project_initial(*ref_ops, u0_fn);

        const auto n_rungs = cfg.n_list.size();
        std::vector<Mesh> meshes;
        std::vector<std::shared_ptr<const Operators>> ops_k;
        std::vector<Field> u0_k;
        std::vector<Prolongation> prolong;
        for (std::size_t k = 0; k < n_rungs; ++k) {
            meshes.push_back(build_uniform_mesh(cfg.n_list[k]));
        }
        for (std::size_t k = 0; k < n_rungs; ++k) {
            ops_k.push_back(build_operators(meshes[k], &X, cfg.quad_order));
            u0_k.push_back(project_initial(*ops_k[k], u0_fn));
            prolong.emplace_back(cfg.n_list[k], cfg.n_ref);
            RungResult r;
            r.tau = cfg.tau;
            r.n = cfg.n_list[k];
            r.h_axis = meshes[k].axis_spacing;
            r.resolution = r.h_axis;
            rep.rungs.push_back(r);
        }

        const auto n_steps = static_cast<int>(std::llround(cfg.T / cfg.tau));
        rep.mesh_constraint_warning = !scheme_params(cfg, cfg.tau).mesh_constraint_ok();

        std::vector<RealizationData> data(cfg.M);
        parallel_realizations(cfg.M, cfg.jobs, [&](int m) {
            auto& d = data[m];
            d.l2sq.resize(n_rungs);
            d.hm1sq.resize(n_rungs);
            d.h1int.assign(n_rungs, 0.0);
            d.wall.assign(n_rungs, 0.0);
            try {
                const auto tr0 = Clock::now();
                const BrownianPath path =
                    generate_path(cfg.master_seed, static_cast<std::uint64_t>(m), cfg.T,
                                  cfg.tau_ref);
                const auto inc = coarsen(path, cfg.tau);

                std::vector<Field> ref(n_steps);
                Stepper ref_stepper(*ref_ops, scheme_params(cfg, cfg.tau));
                RunOptions ref_opts;
                ref_opts.track_energy = false;
                ref_opts.on_step = [&](int n, double, const Field& u, const Field&) {
                    ref[n - 1] = u;
                };
                ref_stepper.run_path(ref_u0, inc, ref_opts);
                const double ref_wall = seconds_since(tr0);

                for (std::size_t k = 0; k < n_rungs; ++k) {
                    const auto tk0 = Clock::now();
                    d.l2sq[k].assign(n_steps, 0.0);
                    d.hm1sq[k].assign(n_steps, 0.0);
                    Stepper stepper(*ops_k[k], scheme_params(cfg, cfg.tau));
                    RunOptions opts;
                    opts.track_energy = false;
                    opts.on_step = [&](int n, double, const Field& u, const Field&) {
                        const Field E = prolong[k].apply(u) - ref[n - 1];
                        d.l2sq[k][n - 1] = E.dot(ref_ops->M.mat * E);
                        d.h1int[k] += cfg.tau * E.dot(ref_ops->A.mat * E);
                        const double hm1 = h_minus1_norm(*ref_ops, E);
                        d.hm1sq[k][n - 1] = hm1 * hm1;
                    };
                    stepper.run_path(u0_k[k], inc, opts);
                    d.wall[k] = seconds_since(tk0) + ref_wall / double(n_rungs);
                }
            } catch (const SolverError& e) {
                d.ok = false;
                d.error = e.what();
                d.failed_step = e.step_index;
            }
        });

        std::vector<SeriesAcc> l2_acc, hm1_acc, h1_acc;
        for (std::size_t k = 0; k < n_rungs; ++k) {
            l2_acc.emplace_back(n_steps);
            hm1_acc.emplace_back(n_steps);
            h1_acc.emplace_back(1);
        }
        for (const auto& d : data) {
            if (!d.ok) continue;
            for (std::size_t k = 0; k < n_rungs; ++k) {
                l2_acc[k].add(d.l2sq[k]);
                hm1_acc[k].add(d.hm1sq[k]);
                h1_acc[k].add({d.h1int[k]});
            }
        }
        finalize_report(rep, cfg, data, l2_acc, hm1_acc, h1_acc);
    } else {
        throw ConfigError("study", "estimate_errors requires a temporal or spatial study");
    }

    rep.wall_seconds = seconds_since(t0);
    return rep;
}

EnergyStudy energy_decay_study(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const auto mesh = std::make_shared<Mesh>(build_uniform_mesh(cfg.n_ref));
    const VectorFieldX X{};
    const auto ops = build_operators(*mesh, &X, cfg.quad_order);
    const Field u0 = project_initial(*ops, make_initial_data(cfg));

    const auto n_steps = static_cast<int>(std::llround(cfg.T / cfg.tau));

    EnergyStudy st;
    st.mesh = mesh;
    st.mesh_constraint_warning = !scheme_params(cfg, cfg.tau).mesh_constraint_ok();
    for (int n = 0; n <= n_steps; ++n) st.times.push_back(n * cfg.tau);

    struct Slot {
        bool ok = true;
        std::string error;
        int failed_step = -1;
        std::vector<double> energy, mass;
        std::vector<Field> snaps;
    };
    std::vector<Slot> data(cfg.M);

    parallel_realizations(cfg.M, cfg.jobs, [&](int m) {
        auto& d = data[m];
        try {
            const BrownianPath path = generate_path(
                cfg.master_seed, static_cast<std::uint64_t>(m), cfg.T, cfg.tau_ref);
            const auto inc = coarsen(path, cfg.tau);
            Stepper stepper(*ops, scheme_params(cfg, cfg.tau));
            RunOptions opts;
            opts.snapshot_times = cfg.snapshot_times;
            Trajectory traj = stepper.run_path(u0, inc, opts);
            d.energy = std::move(traj.energy_series);
            d.mass = std::move(traj.mass_series);
            d.snaps = std::move(traj.snapshots);
            if (m == 0) {
                st.snapshot_times = traj.snapshot_times;
            }
        } catch (const SolverError& e) {
            d.ok = false;
            d.error = e.what();
            d.failed_step = e.step_index;
        }
    });

    int m_eff = 0;
    SeriesAcc energy_acc(n_steps + 1);
    for (const auto& d : data) {
        if (!d.ok) {
            ++st.skipped;
            if (cfg.skip_policy == SkipPolicy::abort) {
                SolverError err(d.error);
                err.step_index = d.failed_step;
                throw err;
            }
        }
    }
    st.valid = st.skipped * 100 <= cfg.M;

    std::vector<double> mass_sum(n_steps + 1, 0.0);
    std::vector<Field> snap_sum;
    for (const auto& d : data) {
        if (!d.ok) continue;
        ++m_eff;
        energy_acc.add(d.energy);
        for (int i = 0; i <= n_steps; ++i) mass_sum[i] += d.mass[i];
        if (snap_sum.empty())
            snap_sum = d.snaps;
        else
            for (std::size_t s = 0; s < snap_sum.size(); ++s) snap_sum[s] += d.snaps[s];
    }
    if (m_eff == 0) throw SolverError("energy_decay_study: every realization failed");

    st.mean_energy.resize(n_steps + 1);
    st.energy_se.resize(n_steps + 1);
    st.mean_mass.resize(n_steps + 1);
    for (int i = 0; i <= n_steps; ++i) {
        const double mean = energy_acc.sum[i] / m_eff;
        st.mean_energy[i] = mean;
        st.mean_mass[i] = mass_sum[i] / m_eff;
        if (m_eff > 1) {
            const double var = std::max(
                0.0, (energy_acc.sumsq[i] - energy_acc.sum[i] * energy_acc.sum[i] / m_eff) /
                         (m_eff - 1));
            st.energy_se[i] = std::sqrt(var / m_eff);
        }
    }
    for (auto& s : snap_sum) st.mean_snapshots.push_back(s / double(m_eff));
    return st;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

} // namespace

void write_error_report_csv(std::ostream& out, const ErrorReport& rep) {
    out << "# sch-error-report v1\n";
    out << (rep.study == Study::temporal ? "tau" : "h")
        << ",linf_l2_error,linf_l2_stderr,l2_h1_error,l2_h1_stderr,"
           "hm1_error,hm1_stderr,order_linf_l2,order_l2_h1,order_hm1\n";
    for (std::size_t k = 0; k < rep.rungs.size(); ++k) {
        const auto& r = rep.rungs[k];
        out << fmt(r.resolution) << "," << fmt(r.linf_l2) << "," << fmt(r.linf_l2_se) << ","
            << fmt(r.l2_h1) << "," << fmt(r.l2_h1_se) << "," << fmt(r.hm1) << ","
            << fmt(r.hm1_se);
        if (k == 0) {
            out << ",,,";
        } else {
            auto ord = [&](const std::vector<double>& o) {
                return o.empty() ? std::string() : fmt(o[k - 1]);
            };
            out << "," << ord(rep.orders_linf_l2) << "," << ord(rep.orders_l2_h1) << ","
                << ord(rep.orders_hm1);
        }
        out << "\n";
    }
}

void write_error_report_json(std::ostream& out, const ErrorReport& rep,
                             const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["schema"] = "sch-error-report-v1";
    j["study"] = to_string(rep.study);
    j["config"] = serialize_config(cfg);
    j["config_hash"] = rep.config_hash;
    j["master_seed"] = rep.master_seed;
    j["rng"] = rng_id();
    j["normal_sampler"] = normal_sampler_id();
    j["valid"] = rep.valid;
    j["skipped_realizations"] = rep.skipped;
    j["mesh_constraint_warning"] = rep.mesh_constraint_warning;
    j["wall_seconds"] = rep.wall_seconds;
    {
        std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        j["generated_at"] = buf;
    }
    j["rungs"] = nlohmann::json::array();
    for (const auto& r : rep.rungs) {
        nlohmann::json jr;
        jr["tau"] = r.tau;
        jr["n"] = r.n;
        jr["h_axis"] = r.h_axis;
        jr["linf_l2_error"] = r.linf_l2;
        jr["linf_l2_stderr"] = r.linf_l2_se;
        jr["l2_h1_error"] = r.l2_h1;
        jr["l2_h1_stderr"] = r.l2_h1_se;
        jr["hm1_error"] = r.hm1;
        jr["hm1_stderr"] = r.hm1_se;
        jr["wall_seconds"] = r.wall_seconds;
        j["rungs"].push_back(jr);
    }
    j["orders"] = {{"linf_l2", rep.orders_linf_l2},
                   {"l2_h1", rep.orders_l2_h1},
                   {"hm1", rep.orders_hm1}};
    out << j.dump(2) << "\n";
}

} // namespace sch
