#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace sch {

// Wiener increments at the reference resolution. Regeneration from the same
// (master_seed, realization) is bit-identical; distinct realizations draw from
// independent counter-based streams.
struct BrownianPath {
    double tau_ref = 0.0;
    double T = 0.0;
    std::uint64_t master_seed = 0;
    std::uint64_t realization = 0;
    std::vector<double> increments;   // N(0, tau_ref) each
};

// Philox4x32-10 block keyed by seed, countered by (realization, index).
std::array<std::uint32_t, 4> philox4x32(std::uint64_t seed, std::uint64_t ctr_hi,
                                        std::uint64_t ctr_lo);

// Inverse standard normal CDF (Acklam initializer + one Halley refinement).
double normal_icdf(double p);

// Standard normal variate, pure function of (seed, realization, index).
double normal_sample(std::uint64_t master_seed, std::uint64_t realization,
                     std::uint64_t index);

// Rejects (T, tau_ref) pairs that do not divide within 1e-9 * T.
BrownianPath generate_path(std::uint64_t master_seed, std::uint64_t realization,
                           double T, double tau_ref);

// Coarse increment n = left-to-right sum of the fine increments spanning
// [n tau, (n+1) tau]. Rejects tau not a multiple of tau_ref or not dividing T.
std::vector<double> coarsen(const BrownianPath& path, double tau);

// Provenance identifiers recorded in reports.
inline const char* rng_id() { return "philox4x32-10"; }
inline const char* normal_sampler_id() { return "icdf-sym-acklam-halley"; }

} // namespace sch
