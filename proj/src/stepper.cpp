#include "sch/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sch/assembly_detail.hpp"
#include "sch/quadrature.hpp"

namespace sch {

Field project_initial(const Operators& ops,
                      const std::function<double(const Vec2&)>& u0, int quad_order) {
    const Mesh& mesh = *ops.mesh;
    const TriQuadRule& rule = rule_for_order(std::max(quad_order, 4));
    Field b = Field::Zero(mesh.num_vertices());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Vec2& p0 = mesh.vertices[tri[0]];
        const Vec2& p1 = mesh.vertices[tri[1]];
        const Vec2& p2 = mesh.vertices[tri[2]];
        const double area = triangle_area(mesh, t);
        for (int q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const Vec2 x = lam[0] * p0 + lam[1] * p1 + lam[2] * p2;
            const double w = area * rule.weights[q] * u0(x);
            for (int a = 0; a < 3; ++a) b[tri[a]] += w * lam[a];
        }
    }
    Field u = ops.M_solver.solve(b);
    if (ops.M_solver.info() != Eigen::Success)
        throw LinearSolveFailure("project_initial: mass solve failed");
    return u;
}

Field initial_potential(const Operators& ops, const Field& u, double epsilon,
                        int quad_order) {
    Field rhs = epsilon * (ops.A.mat * u) +
                assemble_nonlinear_load(*ops.mesh, u, quad_order) / epsilon;
    Field w = ops.M_solver.solve(rhs);
    if (ops.M_solver.info() != Eigen::Success)
        throw LinearSolveFailure("initial_potential: mass solve failed");
    return w;
}

namespace {

// Position of (row, col) in a compressed column of the block matrix.
int csc_offset(const SpMatC& m, int row, int col) {
    const int* inner = m.innerIndexPtr();
    const int* outer = m.outerIndexPtr();
    const int* lo = inner + outer[col];
    const int* hi = inner + outer[col + 1];
    const int* it = std::lower_bound(lo, hi, row);
    return static_cast<int>(it - inner);
}

std::vector<double> csr_values(const SpMat& m) {
    return {m.valuePtr(), m.valuePtr() + m.nonZeros()};
}

// Pair index of (row, col) in the shared CSR pattern.
int csr_pair_index(const SpMat& m, int row, int col) {
    const int* inner = m.innerIndexPtr();
    const int* outer = m.outerIndexPtr();
    const int* lo = inner + outer[row];
    const int* hi = inner + outer[row + 1];
    const int* it = std::lower_bound(lo, hi, col);
    return static_cast<int>(it - inner);
}

} // namespace

Stepper::Stepper(const Operators& ops, const SchemeParams& params)
    : ops_(ops), params_(params), n_(ops.mesh->num_vertices()) {
    const SpMat& M = ops_.M.mat;
    const SpMat& A = ops_.A.mat;
    const SpMat& AX = ops_.AX.mat;
    if (M.nonZeros() != A.nonZeros() || M.nonZeros() != AX.nonZeros())
        throw std::logic_error("Stepper: operator sparsity patterns differ");

    Mv_ = csr_values(M);
    Av_ = csr_values(A);
    AXv_ = csr_values(AX);
    Jv_.assign(Mv_.size(), 0.0);

    const Mesh& mesh = *ops_.mesh;
    tri_slots_.resize(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                tri_slots_[t][3 * a + b] = csr_pair_index(M, tri[a], tri[b]);
    }

    // Fixed block pattern; per-iteration updates only rewrite values.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(4 * M.nonZeros());
    for (int i = 0; i < n_; ++i)
        for (SpMat::InnerIterator it(M, i); it; ++it) {
            const int j = static_cast<int>(it.col());
            trips.emplace_back(i, j, 1.0);
            trips.emplace_back(i, n_ + j, 1.0);
            trips.emplace_back(n_ + i, j, 1.0);
            trips.emplace_back(n_ + i, n_ + j, 1.0);
        }
    block_.resize(2 * n_, 2 * n_);
    block_.setFromTriplets(trips.begin(), trips.end());
    block_.makeCompressed();

    const auto nnz = static_cast<int>(Mv_.size());
    off00_.resize(nnz);
    off01_.resize(nnz);
    off10_.resize(nnz);
    off11_.resize(nnz);
    int k = 0;
    for (int i = 0; i < n_; ++i)
        for (SpMat::InnerIterator it(M, i); it; ++it, ++k) {
            const int j = static_cast<int>(it.col());
            off00_[k] = csc_offset(block_, i, j);
            off01_[k] = csc_offset(block_, i, n_ + j);
            off10_[k] = csc_offset(block_, n_ + i, j);
            off11_[k] = csc_offset(block_, n_ + i, n_ + j);
        }

    // Constant blocks: S = M + tau (delta^2/2) A_X, tau A, M.
    double* vals = block_.valuePtr();
    const double c_ax = params_.tau * 0.5 * params_.delta * params_.delta;
    for (int p = 0; p < nnz; ++p) {
        vals[off00_[p]] = Mv_[p] + c_ax * AXv_[p];
        vals[off01_[p]] = params_.tau * Av_[p];
        vals[off11_[p]] = Mv_[p];
    }
}

void Stepper::assemble_jacobian_values(const Field& u) {
    std::fill(Jv_.begin(), Jv_.end(), 0.0);
    const TriQuadRule& rule = rule_for_order(4);
    const Mesh& mesh = *ops_.mesh;
    double loc[3][3];
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        detail::element_nonlinear_jacobian(mesh, t, u, rule, loc);
        const auto& slots = tri_slots_[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) Jv_[slots[3 * a + b]] += loc[a][b];
    }
    // Block (1,0) = -eps A - (1/eps) J(u).
    double* vals = block_.valuePtr();
    const double inv_eps = 1.0 / params_.epsilon;
    for (std::size_t p = 0; p < Jv_.size(); ++p)
        vals[off10_[p]] = -params_.epsilon * Av_[p] - inv_eps * Jv_[p];
}

void Stepper::residual(const Field& u, const Field& w, const Field& rhs1, Field& r1,
                       Field& r2) const {
    const double c_ax = params_.tau * 0.5 * params_.delta * params_.delta;
    r1 = ops_.M.mat * u + c_ax * (ops_.AX.mat * u) + params_.tau * (ops_.A.mat * w) - rhs1;
    r2 = ops_.M.mat * w - params_.epsilon * (ops_.A.mat * u) -
         assemble_nonlinear_load(*ops_.mesh, u, 4) / params_.epsilon;
}

void Stepper::apply_jacobian(const Field& du, const Field& dw, Field& out1,
                             Field& out2) const {
    const double c_ax = params_.tau * 0.5 * params_.delta * params_.delta;
    const SpMat& M = ops_.M.mat;
    const Eigen::Map<const SpMat> J(n_, n_, static_cast<int>(Jv_.size()),
                                    M.outerIndexPtr(), M.innerIndexPtr(), Jv_.data());
    out1 = M * du + c_ax * (ops_.AX.mat * du) + params_.tau * (ops_.A.mat * dw);
    out2 = M * dw - params_.epsilon * (ops_.A.mat * du) - (J * du) / params_.epsilon;
}

void Stepper::refactorize() {
    if (!pattern_analyzed_) {
        lu_.analyzePattern(block_);
        pattern_analyzed_ = true;
    }
    lu_.factorize(block_);
    if (lu_.info() != Eigen::Success)
        throw LinearSolveFailure("Newton: block Jacobian factorization failed");
    factorized_ = true;
}

bool Stepper::solve_direction(const Field& r1, const Field& r2, Field& du, Field& dw) {
    constexpr double kLinTol = 1e-6;
    constexpr int kMaxRefine = 5;

    Field rhs(2 * n_);
    rhs.head(n_) = -r1;
    rhs.tail(n_) = -r2;
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) {
        du.setZero(n_);
        dw.setZero(n_);
        return true;
    }

    bool fresh = !factorized_;
    if (fresh) refactorize();

    for (int attempt = 0; attempt < 2; ++attempt) {
        Field delta = lu_.solve(rhs);
        if (lu_.info() != Eigen::Success)
            throw LinearSolveFailure("Newton: block solve failed");
        Field a1(n_), a2(n_), res(2 * n_);
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= kMaxRefine; ++k) {
            apply_jacobian(delta.head(n_), delta.tail(n_), a1, a2);
            res.head(n_) = rhs.head(n_) - a1;
            res.tail(n_) = rhs.tail(n_) - a2;
            const double rn = res.norm();
            if (rn <= kLinTol * rhs_norm) {
                du = delta.head(n_);
                dw = delta.tail(n_);
                return true;
            }
            if (k == kMaxRefine || rn > 0.5 * prev) break;   // stalled
            prev = rn;
            delta += lu_.solve(res);
            if (lu_.info() != Eigen::Success)
                throw LinearSolveFailure("Newton: refinement solve failed");
        }
        if (fresh) {
            // fresh factorization and still no convergence: accept the direct
            // solution (residual is at the level the factorization permits)
            du = delta.head(n_);
            dw = delta.tail(n_);
            return true;
        }
        refactorize();
        fresh = true;
    }
    return false;
}

StepResult Stepper::step(const Field& u_n, const Field& w_n, double dW) {
    if (!std::isfinite(dW)) throw std::invalid_argument("step: non-finite increment");

    StepResult res;
    res.u = u_n;
    res.w = w_n;

    const Field Mun = ops_.M.mat * u_n;
    const Field rhs1 = Mun + (params_.delta * dW) * (ops_.CX.mat * u_n);
    const double tol = params_.newton_tol * std::max(Mun.norm(), 1e-12);

    Field r1(n_), r2(n_);
    Field u_try(n_), w_try(n_), r1t(n_), r2t(n_);
    residual(res.u, res.w, rhs1, r1, r2);
    double rn = std::sqrt(r1.squaredNorm() + r2.squaredNorm());

    int iter = 0;
    while (rn > tol) {
        res.diag.residual_history.push_back(rn);
        if (iter >= params_.newton_max_iter)
            throw NewtonDiverged("Newton: residual above tolerance after max iterations");

        assemble_jacobian_values(res.u);
        Field du(n_), dw(n_);
        if (!solve_direction(r1, r2, du, dw))
            throw LinearSolveFailure("Newton: direction solve failed");

        // Full step first; halve the damping factor only on stall.
        double alpha = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= 5; ++halving) {
            u_try = res.u + alpha * du;
            w_try = res.w + alpha * dw;
            residual(u_try, w_try, rhs1, r1t, r2t);
            const double rt = std::sqrt(r1t.squaredNorm() + r2t.squaredNorm());
            if (rt < rn) {
                res.u.swap(u_try);
                res.w.swap(w_try);
                r1.swap(r1t);
                r2.swap(r2t);
                rn = rt;
                accepted = true;
                if (halving > 0) res.diag.damping_halvings += halving;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw NewtonDiverged("Newton: no residual decrease after 5 damping halvings");
        ++iter;
    }

    res.diag.newton_iters = iter;
    res.diag.final_residual = rn;
    res.diag.mass_drift = std::abs(ops_.m.dot(res.u) - ops_.m.dot(u_n));
    return res;
}

Trajectory Stepper::run_path(const Field& u0, std::span<const double> increments,
                             const RunOptions& opts) {
    const auto N = static_cast<int>(increments.size());
    Trajectory traj;
    traj.mesh_constraint_warning = !params_.mesh_constraint_ok();

    Field u = u0;
    Field w = initial_potential(ops_, u0, params_.epsilon);

    // Requested snapshot times snap to the nearest step.
    std::vector<std::pair<int, double>> snap_steps;
    for (double ts : opts.snapshot_times) {
        int idx = static_cast<int>(std::llround(ts / params_.tau));
        idx = std::clamp(idx, 0, N);
        snap_steps.emplace_back(idx, idx * params_.tau);
    }
    std::sort(snap_steps.begin(), snap_steps.end());
    std::size_t next_snap = 0;

    auto record = [&](int n, const Field& un) {
        traj.mass_series.push_back(ops_.m.dot(un));
        if (opts.track_energy)
            traj.energy_series.push_back(discrete_energy(*ops_.mesh, un, params_.epsilon));
        if (n >= 1) traj.sum_tau_grad_sq += params_.tau * un.dot(ops_.A.mat * un);
        if (opts.track_hm1) traj.sup_hm1 = std::max(traj.sup_hm1, h_minus1_norm(ops_, un));
        while (next_snap < snap_steps.size() && snap_steps[next_snap].first == n) {
            traj.snapshot_times.push_back(snap_steps[next_snap].second);
            traj.snapshots.push_back(un);
            ++next_snap;
        }
    };
    record(0, u);

    for (int n = 0; n < N; ++n) {
        StepResult r;
        try {
            r = step(u, w, increments[n]);
        } catch (SolverError& e) {
            e.step_index = n;
            throw;
        }
        u = std::move(r.u);
        w = std::move(r.w);
        traj.total_newton_iters += r.diag.newton_iters;
        traj.max_newton_iters = std::max(traj.max_newton_iters, r.diag.newton_iters);
        record(n + 1, u);
        if (opts.on_step) opts.on_step(n + 1, (n + 1) * params_.tau, u, w);
    }

    traj.final_u = std::move(u);
    traj.final_w = std::move(w);
    return traj;
}

} // namespace sch
