#pragma once

#include <iosfwd>
#include <memory>

#include "sch/config.hpp"
#include "sch/mesh.hpp"
#include "sch/postproc.hpp"
#include "sch/stepper.hpp"

namespace sch {

struct RungResult {
    double tau = 0.0;
    int n = 0;
    double h_axis = 0.0;            // 2/n
    double resolution = 0.0;        // tau (temporal) or h_axis (spatial)
    double linf_l2 = 0.0, linf_l2_se = 0.0;
    double l2_h1 = 0.0, l2_h1_se = 0.0;
    double hm1 = 0.0, hm1_se = 0.0; // sup-in-time H^{-1} series (extra diagnostics)
    double wall_seconds = 0.0;
};

struct ErrorReport {
    Study study = Study::temporal;
    std::vector<RungResult> rungs;
    std::vector<double> orders_linf_l2, orders_l2_h1, orders_hm1;
    int skipped = 0;
    bool valid = true;              // false when skipped > 1% of M
    bool mesh_constraint_warning = false;
    std::uint64_t master_seed = 0;
    std::string config_hash;
    double wall_seconds = 0.0;
};

// Monte Carlo strong-error study over the configured ladder; realizations are
// coupled to the reference through shared Brownian paths. Reproducible
// bit-for-bit from (config, master_seed); results do not depend on jobs.
ErrorReport estimate_errors(const ExperimentConfig& cfg);

// order_k = log2(e_k / e_{k+1}) for halving ladders. Rejects fewer than two
// rungs and non-positive errors.
std::vector<double> fit_orders(const std::vector<double>& errors);

struct EnergyStudy {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> times;              // t_n, n = 0..N
    std::vector<double> mean_energy;        // E[J(u^n_h)]
    std::vector<double> energy_se;
    std::vector<double> mean_mass;          // E[(u^n_h, 1)]
    std::vector<double> snapshot_times;
    std::vector<Field> mean_snapshots;      // \bar u_h at the snapshot times
    int skipped = 0;
    bool valid = true;
    bool mesh_constraint_warning = false;
};

// Tests 2-3 driver: expectation of the discrete energy over realizations plus
// mean-field snapshots for level-set extraction.
EnergyStudy energy_decay_study(const ExperimentConfig& cfg);

ScalarField make_initial_data(const ExperimentConfig& cfg);

// Deterministic columns only; wall time and timestamps live in the JSON report.
void write_error_report_csv(std::ostream& out, const ErrorReport& rep);
void write_error_report_json(std::ostream& out, const ErrorReport& rep,
                             const ExperimentConfig& cfg);

} // namespace sch
