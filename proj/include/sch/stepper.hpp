#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sch/operators.hpp"

namespace sch {

struct SchemeParams {
    double epsilon = 0.1;
    double delta = 0.0;
    double tau = 1e-3;
    double T = 0.016;
    double newton_tol = 1e-10;       // scaled by ||M u_n||
    int newton_max_iter = 25;
    double mesh_constraint_threshold = 1.0;

    // tau (eps^-3 + eps^-1 delta^4); the constant in the solvability condition
    // is unknown, so crossing the threshold is a warning, not an error.
    double mesh_constraint_indicator() const {
        return tau * (std::pow(epsilon, -3) + std::pow(delta, 4) / epsilon);
    }
    bool mesh_constraint_ok() const {
        return mesh_constraint_indicator() <= mesh_constraint_threshold;
    }
};

struct SolverError : std::runtime_error {
    int step_index = -1;
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NewtonDiverged : SolverError {
    using SolverError::SolverError;
};
struct LinearSolveFailure : SolverError {
    using SolverError::SolverError;
};

struct StepDiagnostics {
    int newton_iters = 0;
    int damping_halvings = 0;
    double final_residual = 0.0;
    double mass_drift = 0.0;
    std::vector<double> residual_history;   // pre-update residual norms
};

struct StepResult {
    Field u, w;
    StepDiagnostics diag;
};

struct Trajectory {
    std::vector<double> snapshot_times;   // actual (step-aligned) times
    std::vector<Field> snapshots;
    std::vector<double> mass_series;      // (u^n, 1), n = 0..N
    std::vector<double> energy_series;    // J(u^n), n = 0..N
    double sum_tau_grad_sq = 0.0;         // sum_n tau |grad u^n|^2, n >= 1
    double sup_hm1 = 0.0;                 // sup_n of ||u^n - mean||_{-1,h}
    int total_newton_iters = 0;
    int max_newton_iters = 0;
    bool mesh_constraint_warning = false;
    Field final_u, final_w;
};

struct RunOptions {
    std::vector<double> snapshot_times;
    bool track_energy = true;
    bool track_hm1 = false;
    // Called after every accepted step (n = 1..N) with the new state.
    std::function<void(int n, double t, const Field& u, const Field& w)> on_step;
};

// L2 projection u0 -> V_h: solves M u = b with b_i = int u0 psi_i dx.
Field project_initial(const Operators& ops,
                      const std::function<double(const Vec2&)>& u0,
                      int quad_order = 6);

// w0 from the scheme's initialization system: M w = eps A u + (1/eps) N(u).
Field initial_potential(const Operators& ops, const Field& u, double epsilon,
                        int quad_order = 4);

// Advances one realization of the fully discrete scheme. A Stepper instance
// is bound to one trajectory; share the Operators, not the Stepper.
class Stepper {
public:
    Stepper(const Operators& ops, const SchemeParams& params);

    // Newton solve of the coupled block system
    //   [M + tau (delta^2/2) A_X] u + tau A w = M u_n + delta dW C_X u_n
    //   M w - eps A u - (1/eps) N(u)          = 0
    // from initial guess (u_n, w_n).
    StepResult step(const Field& u_n, const Field& w_n, double dW);

    Trajectory run_path(const Field& u0, std::span<const double> increments,
                        const RunOptions& opts = {});

    const SchemeParams& params() const { return params_; }

private:
    void assemble_jacobian_values(const Field& u);
    void residual(const Field& u, const Field& w, const Field& rhs1, Field& r1,
                  Field& r2) const;
    void apply_jacobian(const Field& du, const Field& dw, Field& out1,
                        Field& out2) const;
    void refactorize();
    // Newton direction to within kLinTol relative linear residual; the cached
    // factorization serves as a stationary preconditioner and is refreshed
    // only when the correction iteration stalls.
    bool solve_direction(const Field& r1, const Field& r2, Field& du, Field& dw);

    const Operators& ops_;
    SchemeParams params_;
    int n_ = 0;

    // Flat per-adjacency-pair values (shared CSR pattern of M, A, A_X).
    std::vector<double> Mv_, Av_, AXv_, Jv_;
    std::vector<std::array<int, 9>> tri_slots_;   // pair index per (t, a, b)

    SpMatC block_;                                // 2N x 2N Jacobian
    std::vector<int> off00_, off01_, off10_, off11_;
    Eigen::SparseLU<SpMatC> lu_;
    bool pattern_analyzed_ = false;
    bool factorized_ = false;
};

} // namespace sch
