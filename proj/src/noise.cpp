#include "sch/noise.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace sch {

namespace {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
    const std::uint64_t p = std::uint64_t(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::uint64_t seed, std::uint64_t ctr_hi,
                                        std::uint64_t ctr_lo) {
    std::array<std::uint32_t, 4> c = {
        static_cast<std::uint32_t>(ctr_lo), static_cast<std::uint32_t>(ctr_lo >> 32),
        static_cast<std::uint32_t>(ctr_hi), static_cast<std::uint32_t>(ctr_hi >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(0xD2511F53u, c[0], hi0, lo0);
        mulhilo(0xCD9E8D57u, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
    }
    return c;
}

double normal_icdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_icdf: p must be in (0,1)");

    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }

    // One Halley step against the exact CDF brings the initializer (~1e-9
    // relative) to full double precision.
    static const double sqrt2pi = std::sqrt(2.0 * M_PI);
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * sqrt2pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

double normal_sample(std::uint64_t master_seed, std::uint64_t realization,
                     std::uint64_t index) {
    const auto words = philox4x32(master_seed, realization, index);
    const std::uint64_t bits = (std::uint64_t(words[0]) << 32) | words[1];
    // 52 magnitude bits mapped into (0, 1/2] plus a sign bit: only the lower
    // branch of the inverse CDF is used, which stays accurate in the tail
    // (near p = 1 the complement 1-p is representation-limited).
    const double u = (double(bits >> 12) + 0.5) * 0x1p-53;
    const double z = normal_icdf(u);
    return (bits & 1) ? -z : z;
}

BrownianPath generate_path(std::uint64_t master_seed, std::uint64_t realization,
                           double T, double tau_ref) {
    if (!(T > 0.0) || !(tau_ref > 0.0))
        throw std::invalid_argument("generate_path: T and tau_ref must be positive");
    const double ratio = T / tau_ref;
    const auto n = static_cast<std::int64_t>(std::llround(ratio));
    if (n < 1 || std::abs(n * tau_ref - T) > 1e-9 * T)
        throw std::invalid_argument("generate_path: tau_ref does not divide T");

    BrownianPath path;
    path.tau_ref = tau_ref;
    path.T = T;
    path.master_seed = master_seed;
    path.realization = realization;
    path.increments.resize(static_cast<std::size_t>(n));
    const double scale = std::sqrt(tau_ref);
    for (std::int64_t i = 0; i < n; ++i)
        path.increments[i] =
            scale * normal_sample(master_seed, realization, static_cast<std::uint64_t>(i));
    return path;
}

std::vector<double> coarsen(const BrownianPath& path, double tau) {
    const double ratio = tau / path.tau_ref;
    const auto k = static_cast<std::int64_t>(std::llround(ratio));
    if (k < 1 || std::abs(k * path.tau_ref - tau) > 1e-9 * tau)
        throw std::invalid_argument("coarsen: tau is not a multiple of tau_ref");
    const auto n_fine = static_cast<std::int64_t>(path.increments.size());
    if (n_fine % k != 0)
        throw std::invalid_argument("coarsen: tau does not divide T");

    std::vector<double> coarse(static_cast<std::size_t>(n_fine / k));
    std::int64_t idx = 0;
    for (auto& c : coarse) {
        double s = 0.0;   // fixed left-to-right order
        for (std::int64_t j = 0; j < k; ++j) s += path.increments[idx++];
        c = s;
    }
    return coarse;
}

} // namespace sch
