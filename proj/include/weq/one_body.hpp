#pragma once

// One-body observables of the symmetrized / antisymmetrized / distinguishable
// two-packet state: density rho1, current j1, the analytic first and second
// moments of rho1, and the closed-form time at which the rho1 center reaches
// the detector.
//
// Sign convention everywhere: BE takes the upper sign, FD the lower one.

#include <cmath>
#include <complex>

#include "core.hpp"
#include "wavepacket.hpp"

namespace weq {

struct DensityCurrentSample {
    double z = 0.0;   // m
    double t = 0.0;   // s
    double rho = 0.0; // 1/m
    double j = 0.0;   // 1/s
};

// Caches the statistics-dependent constants (overlap, |N|^2) so grid and
// quadrature loops do not recompute them per point.
class OneBodyEvaluator {
public:
    explicit OneBodyEvaluator(const TwoBodyConfig& config) : cfg_(config) {
        cfg_.validate();
        sign_ = exchange_sign(cfg_.statistics);
        if (cfg_.statistics == StatisticsKind::MB) {
            ov_ = 0.0;
            n2_ = 0.5;
        } else {
            ov_ = overlap(cfg_.packet_a, cfg_.packet_b, cfg_.scenario);
            const double n = normalization(cfg_.packet_a, cfg_.packet_b,
                                           cfg_.statistics, cfg_.scenario);
            n2_ = n * n;
        }
    }

    const TwoBodyConfig& config() const { return cfg_; }
    cplx overlap_value() const { return ov_; }
    double norm_squared() const { return n2_; }

    // rho1(z,t) = |N|^2 (|psi_a|^2 + |psi_b|^2 +- 2 Re[<psi_a|psi_b> psi_a psi_b*]);
    // MB replaces the braces by the plain mixture (|psi_a|^2 + |psi_b|^2)/2.
    double rho(double z, double t) const {
        const cplx pa = amp(cfg_.packet_a, t, z);
        const cplx pb = amp(cfg_.packet_b, t, z);
        double val = std::norm(pa) + std::norm(pb);
        if (sign_ != 0.0)
            val += sign_ * 2.0 * std::real(ov_ * pa * std::conj(pb));
        return n2_ * val;
    }

    // j1(z,t) = (hbar/m)|N|^2 Im[psi_a* psi_a' + psi_b* psi_b'
    //                            +- (<a|b> psi_b* psi_a' + <b|a> psi_a* psi_b')]
    double current(double z, double t) const {
        const double g = cfg_.scenario.accel();
        const cplx pa = amp(cfg_.packet_a, t, z);
        const cplx pb = amp(cfg_.packet_b, t, z);
        const cplx la = detail::log_derivative(cfg_.packet_a, cfg_.mass, g, t, z);
        const cplx lb = detail::log_derivative(cfg_.packet_b, cfg_.mass, g, t, z);
        double s = std::norm(pa) * la.imag() + std::norm(pb) * lb.imag();
        if (sign_ != 0.0) {
            const cplx w = ov_ * pa * std::conj(pb);
            s += sign_ * std::imag(w * la + std::conj(w) * lb);
        }
        return (hbar / cfg_.mass) * n2_ * s;
    }

    DensityCurrentSample sample(double z, double t) const {
        return {z, t, rho(z, t), current(z, t)};
    }

private:
    cplx amp(const GaussianPacketSpec& spec, double t, double z) const {
        return cfg_.scenario.falling()
                   ? detail::psi_fall(spec, cfg_.mass, cfg_.scenario.g, t, z)
                   : detail::psi_free(spec, cfg_.mass, t, z);
    }

    TwoBodyConfig cfg_;
    double sign_ = 0.0;
    cplx ov_{};
    double n2_ = 0.5;
};

inline double rho1(const TwoBodyConfig& config, double z, double t) {
    if (t < 0.0) throw validation_error("rho1: t must be >= 0");
    return OneBodyEvaluator(config).rho(z, t);
}

inline double j1(const TwoBodyConfig& config, double z, double t) {
    if (t < 0.0) throw validation_error("j1: t must be >= 0");
    return OneBodyEvaluator(config).current(z, t);
}

// <z>(t) = integral of z rho1. Exchange moments of Gaussian products collapse
// to |<psi_a|psi_b>|^2 times a real factor, giving
//
//   <z>_pm = |N|^2 { z_cl,a + z_cl,b
//            +- |ov|^2 [ 2 (hbar t (k_a s_a^2 + k_b s_b^2)/m
//                           + z_ca s_b^2 + z_cb s_a^2) / (s_a^2+s_b^2)
//                        - g t^2 ] }
//
// with z_cl,i = z_ci + hbar k_i t / m - g t^2/2. This equals the center-of-
// mass expectation value; for equal widths it reduces to the classical-center
// midpoint for every statistics, which is what brute-force integration of
// rho1 confirms. (It is mass-independent for the k=0 fall case.)
inline double mean_position(const TwoBodyConfig& config, double t) {
    config.validate();
    if (t < 0.0) throw validation_error("mean_position: t must be >= 0");
    const double g = config.scenario.accel();
    const GaussianPacketSpec& a = config.packet_a;
    const GaussianPacketSpec& b = config.packet_b;
    const double drop = 0.5 * g * t * t;
    const double z_cla = a.z_c + hbar * a.k * t / config.mass - drop;
    const double z_clb = b.z_c + hbar * b.k * t / config.mass - drop;
    if (config.statistics == StatisticsKind::MB)
        return 0.5 * (z_cla + z_clb);

    const double sa2 = a.sigma0 * a.sigma0, sb2 = b.sigma0 * b.sigma0;
    const double ssum = sa2 + sb2;
    const double ov2 = std::norm(overlap(a, b, config.scenario));
    const double n = normalization(a, b, config.statistics, config.scenario);
    const double exch =
        2.0 * (hbar * t * (a.k * sa2 + b.k * sb2) / config.mass +
               a.z_c * sb2 + b.z_c * sa2) / ssum -
        g * t * t;
    const double sign = exchange_sign(config.statistics);
    return n * n * (z_cla + z_clb + sign * ov2 * exch);
}

// Width of rho1 for the free-fall, equal-width, zero-kick case:
//
//   Dz_pm(t)^2 = sigma_t^2 { 1 +- dz^2 / [4 sigma0^2 (∓1 - e^{dz^2/4 sigma0^2})] }
//                + dz^2/4,   dz = z_ca - z_cb
//
// independent of g. MB is the plain two-Gaussian mixture width.
inline double position_spread(const TwoBodyConfig& config, double t) {
    config.validate();
    if (t < 0.0) throw validation_error("position_spread: t must be >= 0");
    if (!config.scenario.falling())
        throw unsupported_config_error(
            "position_spread: closed form covers the free-fall scenario only");
    const GaussianPacketSpec& a = config.packet_a;
    const GaussianPacketSpec& b = config.packet_b;
    if (a.sigma0 != b.sigma0 || a.k != 0.0 || b.k != 0.0)
        throw unsupported_config_error(
            "position_spread: closed form requires equal widths and zero kicks");
    const double s0 = a.sigma0;
    const double st = spread_at(s0, config.mass, t);
    const double dz2 = (a.z_c - b.z_c) * (a.z_c - b.z_c);
    if (config.statistics == StatisticsKind::MB)
        return std::sqrt(st * st + 0.25 * dz2);
    const double sign = exchange_sign(config.statistics);
    const double x = dz2 / (4.0 * s0 * s0);
    const double var =
        st * st * (1.0 + sign * dz2 / (4.0 * s0 * s0 * (-sign - std::exp(x)))) +
        0.25 * dz2;
    return std::sqrt(var);
}

// Closed form for the time at which the center of rho1(z,0) falls to the
// detector at Z=0:
//
//   t_pm = sqrt[ (detector_sum/g) (2 ∓ E)/(2 ± E) ],  E = |<psi_a|psi_b>|^2
//
// where detector_sum plays the role of z_ca + z_cb. MB drops the exchange
// factor. Note this t_pm is the root of a <z>_pm variant that disagrees with
// the rho1 centroid computed here: the brute-force centroid crosses at
// sqrt(detector_sum/g) for every statistics (see README).
inline double center_crossing_time(const TwoBodyConfig& config,
                                   double detector_sum) {
    config.validate();
    if (!config.scenario.falling())
        throw unsupported_config_error(
            "center_crossing_time: defined for the free-fall scenario only");
    const double g = config.scenario.g;
    if (!(detector_sum > 0.0))
        throw no_crossing_error(
            "center_crossing_time: center starts at or below the detector");
    if (config.statistics == StatisticsKind::MB)
        return std::sqrt(detector_sum / g);
    const double e = std::norm(
        overlap(config.packet_a, config.packet_b, config.scenario));
    const double sign = exchange_sign(config.statistics);
    const double radicand =
        (detector_sum / g) * (2.0 - sign * e) / (2.0 + sign * e);
    if (!(radicand > 0.0))
        throw no_crossing_error("center_crossing_time: negative radicand");
    return std::sqrt(radicand);
}

} // namespace weq
