#pragma once

// Closed-form Gaussian packet evolution for free flight and uniform free
// fall, analytic z-derivatives, the two-packet overlap integral and the
// BE/FD normalization constants.
//
// These closed forms are usually written with an im/(2 hbar t) prefactor
// whose t=0 singularity is removable. We evaluate an algebraically identical
// rearrangement with no 1/t anywhere:
//
//   psi_free(z,t) = (2 pi s_t^2)^(-1/4)
//                   * exp[ -(z - z_c - v t)^2 / (4 sigma0 s_t) + i k (z - v t/2) ]
//   psi_fall(z,t) = psi_free(z + g t^2/2, t)
//                   * exp[ -i (m/hbar) (g t z + g^2 t^3 / 6) ]
//
// with s_t = sigma0 (1 + i hbar t / 2 m sigma0^2) and v = hbar k / m. The
// fall form is the standard uniformly-accelerated-frame phase map applied to
// the free solution; the unit tests check both forms against the singular
// originals at t > 0, and the grid propagator provides an independent
// cross-check.

#include <complex>

#include "core.hpp"

namespace weq {

using cplx = std::complex<double>;

// re/im pair used at the public API boundary; converts freely to std::complex.
struct ComplexAmplitude {
    double re = 0.0;
    double im = 0.0;

    ComplexAmplitude() = default;
    ComplexAmplitude(double r, double i) : re(r), im(i) {}
    ComplexAmplitude(const cplx& v) : re(v.real()), im(v.imag()) {}
    operator cplx() const { return {re, im}; }
};

// s_t = sigma0 (1 + i hbar t / 2 m sigma0^2); Re s_t = sigma0, |s_t| = sigma_t.
struct ComplexWidth {
    cplx value;

    double sigma_t() const { return std::abs(value); }
};

inline ComplexWidth complex_width(double sigma0, double mass, double t) {
    if (!(sigma0 > 0.0) || !(mass > 0.0))
        throw validation_error("complex_width: sigma0 and mass must be > 0");
    return {cplx(sigma0, hbar * t / (2.0 * mass * sigma0))};
}

// sigma_t = sigma0 sqrt(1 + hbar^2 t^2 / 4 m^2 sigma0^4)
inline double spread_at(double sigma0, double mass, double t) {
    const double beta = hbar * t / (2.0 * mass * sigma0 * sigma0);
    return sigma0 * std::sqrt(1.0 + beta * beta);
}

namespace detail {

inline void check_evolution_args(const GaussianPacketSpec& spec, double mass,
                                 double t) {
    spec.validate();
    if (!(mass > 0.0))
        throw validation_error("evolve: mass must be > 0");
    if (t < 0.0)
        throw validation_error("evolve: t must be >= 0");
}

// Free packet; also the building block for the fall form.
inline cplx psi_free(const GaussianPacketSpec& spec, double mass, double t,
                     double z) {
    const cplx s_t = complex_width(spec.sigma0, mass, t).value;
    const double v = hbar * spec.k / mass;
    const double u = z - spec.z_c - v * t;
    // (2 pi s_t^2)^(-1/4) = (2 pi sigma0^2)^(-1/4) / sqrt(s_t / sigma0);
    // s_t/sigma0 stays in the right half plane so the principal sqrt is
    // continuous for all t.
    const cplx pref = std::pow(2.0 * M_PI * spec.sigma0 * spec.sigma0, -0.25) /
                      std::sqrt(s_t / spec.sigma0);
    const cplx expo = -u * u / (4.0 * spec.sigma0 * s_t) +
                      cplx(0.0, spec.k * (z - 0.5 * v * t));
    return pref * std::exp(expo);
}

inline cplx psi_fall(const GaussianPacketSpec& spec, double mass, double g,
                     double t, double z) {
    const double phase = -(mass / hbar) * (g * t * z + g * g * t * t * t / 6.0);
    return psi_free(spec, mass, t, z + 0.5 * g * t * t) *
           std::exp(cplx(0.0, phase));
}

// d(psi)/dz / psi, finite everywhere the envelope is.
inline cplx log_derivative(const GaussianPacketSpec& spec, double mass,
                           double g, double t, double z) {
    const cplx s_t = complex_width(spec.sigma0, mass, t).value;
    const double v = hbar * spec.k / mass;
    const double z_cl = spec.z_c + v * t - 0.5 * g * t * t;
    return -(z - z_cl) / (2.0 * spec.sigma0 * s_t) +
           cplx(0.0, spec.k - mass * g * t / hbar);
}

} // namespace detail

inline ComplexAmplitude evolve_free(const GaussianPacketSpec& spec, double mass,
                                    double t, double z) {
    detail::check_evolution_args(spec, mass, t);
    return detail::psi_free(spec, mass, t, z);
}

inline ComplexAmplitude evolve_fall(const GaussianPacketSpec& spec, double mass,
                                    double g, double t, double z) {
    detail::check_evolution_args(spec, mass, t);
    if (!(g > 0.0))
        throw validation_error("evolve_fall: g must be > 0");
    return detail::psi_fall(spec, mass, g, t, z);
}

inline ComplexAmplitude evolve(const GaussianPacketSpec& spec, double mass,
                               const Scenario& scenario, double t, double z) {
    detail::check_evolution_args(spec, mass, t);
    scenario.validate();
    if (scenario.falling())
        return detail::psi_fall(spec, mass, scenario.g, t, z);
    return detail::psi_free(spec, mass, t, z);
}

// Analytic d(psi)/dz for whichever scenario applies.
inline ComplexAmplitude evolve_derivative(const GaussianPacketSpec& spec,
                                          double mass, const Scenario& scenario,
                                          double t, double z) {
    detail::check_evolution_args(spec, mass, t);
    scenario.validate();
    const double g = scenario.accel();
    const cplx psi = scenario.falling() ? detail::psi_fall(spec, mass, g, t, z)
                                        : detail::psi_free(spec, mass, t, z);
    return psi * detail::log_derivative(spec, mass, g, t, z);
}

// <psi_a(t)|psi_b(t)>. Time-invariant under both Hamiltonians (they share a
// unitary evolution), and independent of g, so it is evaluated on the initial
// data for either scenario. Reduces to the familiar k_a=k_b=0 form.
inline cplx overlap(const GaussianPacketSpec& spec_a,
                    const GaussianPacketSpec& spec_b,
                    const Scenario& scenario) {
    spec_a.validate();
    spec_b.validate();
    scenario.validate();
    const double sa = spec_a.sigma0, sb = spec_b.sigma0;
    const double ssum = sa * sa + sb * sb;
    const double dk = spec_a.k - spec_b.k;
    const double dz = spec_a.z_c - spec_b.z_c;
    const double re = 4.0 * dk * dk * sa * sa * sb * sb + dz * dz;
    const double im = 4.0 * dk * (sb * sb * spec_a.z_c + sa * sa * spec_b.z_c);
    return std::sqrt(2.0 * sa * sb / ssum) *
           std::exp(-cplx(re, im) / (4.0 * ssum));
}

// N_pm = [2 (1 +- |<psi_a|psi_b>|^2)]^(-1/2). FD with (near-)identical
// packets has no antisymmetric state to normalize.
inline double normalization(const GaussianPacketSpec& spec_a,
                            const GaussianPacketSpec& spec_b,
                            StatisticsKind statistics,
                            const Scenario& scenario) {
    if (statistics == StatisticsKind::MB)
        throw validation_error("normalization: statistics must be BE or FD");
    const double ov2 = std::norm(overlap(spec_a, spec_b, scenario));
    const double sign = exchange_sign(statistics);
    const double denom = 2.0 * (1.0 + sign * ov2);
    if (statistics == StatisticsKind::FD && 1.0 - ov2 <= 1e-14)
        throw degenerate_state_error(
            "normalization: FD state vanishes for identical packets");
    return 1.0 / std::sqrt(denom);
}

} // namespace weq
