#pragma once

// Spin-dependent probability current for a falling 2D Gaussian packet.
//
// The conventional current j_Sch = (hbar/m) Im[psi* grad psi] is not the only
// current compatible with the continuity equation: for a spin-1/2 particle
// the nonrelativistic limit of the Dirac current adds a divergence-free term
//   j = j_Sch + (hbar/2m) curl(rho s),   s = fixed unit spin axis.
// The two currents give different arrival-time distributions, and the gap
// closes only as 1/m^2 -- slower than the quantum-statistics effect, but a
// distinct mass-dependent correction to the classical fall time.
//
// Geometry: packet separable in (x, z); gravity acts along -z; the momentum
// kick k0 is along z; the x factor is a kick-free spreading Gaussian centered
// at x = 0. Both closed-form moduli below assume the spin axis +y (out of the
// fall plane), which maximizes the spin term; the direct vector construction
// supports any axis and is used to cross-check the closed forms.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "arrival.hpp"
#include "core.hpp"
#include "quadrature.hpp"
#include "wavepacket.hpp"

namespace weq {

struct SpinScenario {
    double sigma0 = 10e-6; // m, common width of both factors
    double z_c = 80e-6;    // m, initial center along the fall axis
    double k0 = 0.0;       // 1/m, momentum kick along z
    double mass = 1.67e-27;              // kg
    double g = 10.0;                     // m/s^2
    std::array<double, 3> spin_axis = {0.0, 1.0, 0.0};

    void validate() const {
        if (!(sigma0 > 0.0) || !std::isfinite(sigma0))
            throw validation_error("SpinScenario: sigma0 must be > 0");
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw validation_error("SpinScenario: mass must be > 0");
        if (!(g > 0.0) || !std::isfinite(g))
            throw validation_error("SpinScenario: g must be > 0");
        if (!std::isfinite(z_c) || !std::isfinite(k0))
            throw validation_error("SpinScenario: z_c and k0 must be finite");
        const double n2 = spin_axis[0] * spin_axis[0] +
                          spin_axis[1] * spin_axis[1] +
                          spin_axis[2] * spin_axis[2];
        if (std::abs(n2 - 1.0) > 1e-9)
            throw validation_error("SpinScenario: spin_axis must be a unit vector");
    }

    bool spin_axis_is_plus_y() const {
        return std::abs(spin_axis[0]) < 1e-15 &&
               std::abs(spin_axis[1] - 1.0) < 1e-12 &&
               std::abs(spin_axis[2]) < 1e-15;
    }
};

namespace detail {

inline void check_spin_closed_form_args(const SpinScenario& sc, double t) {
    sc.validate();
    if (!sc.spin_axis_is_plus_y())
        throw unsupported_config_error(
            "closed-form spin current moduli require spin_axis = (0,1,0); "
            "use spin_current_vector for other axes");
    if (!(t >= 0.0) || !std::isfinite(t))
        throw validation_error("spin current: t must be >= 0 and finite");
}

} // namespace detail

// |j_Sch(x,z,t)|: modulus of the conventional two-component current. The
// polynomial under the root collects the powers of the mass; everything else
// is the shared Gaussian envelope centered on the classical trajectory
// z_cl(t) = z_c + (hbar k0/m) t - g t^2/2.
inline double schrodinger_current_modulus(const SpinScenario& sc, double x,
                                          double z, double t) {
    sc.validate();
    if (!(t >= 0.0) || !std::isfinite(t))
        throw validation_error("spin current: t must be >= 0 and finite");
    const double m = sc.mass, g = sc.g, s0 = sc.sigma0, k0 = sc.k0;
    const double s2 = s0 * s0, s4 = s2 * s2, s8 = s4 * s4;
    const double st2 = s2 + hbar * t * hbar * t / (4.0 * m * m * s2);
    const double zcl = sc.z_c + hbar * k0 * t / m - 0.5 * g * t * t;
    const double dz = z - sc.z_c;
    const double P = g * t * t - 2.0 * dz;
    const double h2 = hbar * hbar, h3 = h2 * hbar, h4 = h2 * h2;
    const double f0 =
        h4 * t * t * (g * g * t * t * t * t + 4.0 * (x * x + dz * dz) -
                      4.0 * g * t * t * dz);
    const double f1 = -16.0 * h3 * k0 * s4 * t * P;
    const double f2 = 16.0 * h2 * s4 * (4.0 * k0 * k0 * s4 + g * t * t * P);
    const double f3 = -128.0 * g * hbar * k0 * s8 * t;
    const double f4 = 64.0 * g * g * s8 * t * t;
    const double poly = (((f4 * m + f3) * m + f2) * m + f1) * m + f0;
    const double env =
        std::exp(-(x * x + (z - zcl) * (z - zcl)) / (2.0 * st2));
    return std::sqrt(std::max(poly, 0.0)) /
           (16.0 * M_PI * m * m * s2 * st2 * st2) * env;
}

// |j(x,z,t)| with the spin term included, spin axis +y. Lower degree in the
// mass than the conventional modulus: the spin term cancels the m^4..m^3
// structure down to a quadratic.
inline double spin_current_modulus(const SpinScenario& sc, double x, double z,
                                   double t) {
    detail::check_spin_closed_form_args(sc, t);
    const double m = sc.mass, g = sc.g, s0 = sc.sigma0, k0 = sc.k0;
    const double s2 = s0 * s0, s4 = s2 * s2;
    const double st2 = s2 + hbar * t * hbar * t / (4.0 * m * m * s2);
    const double zcl = sc.z_c + hbar * k0 * t / m - 0.5 * g * t * t;
    const double dz = z - sc.z_c;
    const double h0 =
        hbar * hbar *
        (16.0 * k0 * k0 * s4 + g * g * t * t * t * t - 16.0 * k0 * s2 * x +
         4.0 * (x * x + dz * dz) - 4.0 * g * t * t * dz);
    const double h1 = 16.0 * g * hbar * s2 * t * (x - 2.0 * k0 * s2);
    const double h2 = 16.0 * g * g * s4 * t * t;
    const double poly = (h2 * m + h1) * m + h0;
    const double env =
        std::exp(-(x * x + (z - zcl) * (z - zcl)) / (2.0 * st2));
    return std::sqrt(std::max(poly, 0.0)) /
           (8.0 * M_PI * m * s0 * st2 * std::sqrt(st2)) * env;
}

struct SpinCurrentSample {
    double rho = 0.0;
    std::array<double, 3> j_sch = {0.0, 0.0, 0.0};  // conventional current
    std::array<double, 3> j_total = {0.0, 0.0, 0.0}; // with curl(rho s)/2m term
};

// Direct construction from the factorized 1D amplitudes; independent of the
// closed forms above and valid for any unit spin axis. The y component only
// appears when the axis has in-plane components.
inline SpinCurrentSample spin_current_vector(const SpinScenario& sc, double x,
                                             double z, double t) {
    sc.validate();
    if (!(t >= 0.0) || !std::isfinite(t))
        throw validation_error("spin current: t must be >= 0 and finite");
    const GaussianPacketSpec spec_x{sc.sigma0, 0.0, 0.0};
    const GaussianPacketSpec spec_z{sc.sigma0, sc.z_c, sc.k0};
    const Scenario fall = Scenario::free_fall(sc.g);
    const Scenario free = Scenario::free_evolution();

    const cplx px = evolve(spec_x, sc.mass, free, t, x);
    const cplx pz = evolve(spec_z, sc.mass, fall, t, z);
    const cplx dpx = evolve_derivative(spec_x, sc.mass, free, t, x);
    const cplx dpz = evolve_derivative(spec_z, sc.mass, fall, t, z);

    const cplx psi = px * pz;
    const cplx gx = dpx * pz; // d psi / dx
    const cplx gz = px * dpz; // d psi / dz

    SpinCurrentSample out;
    out.rho = std::norm(psi);
    const double pref = hbar / sc.mass;
    out.j_sch[0] = pref * std::imag(std::conj(psi) * gx);
    out.j_sch[2] = pref * std::imag(std::conj(psi) * gz);

    const double rho_x = 2.0 * std::real(std::conj(psi) * gx);
    const double rho_z = 2.0 * std::real(std::conj(psi) * gz);
    // (hbar/2m) grad(rho) x s  (rho has no y dependence)
    const double c = hbar / (2.0 * sc.mass);
    const auto& s = sc.spin_axis;
    out.j_total[0] = out.j_sch[0] + c * (-rho_z * s[1]);
    out.j_total[1] = c * (rho_z * s[0] - rho_x * s[2]);
    out.j_total[2] = out.j_sch[2] + c * (rho_x * s[1]);
    return out;
}

struct SpinArrivalResult {
    double detector_z = 0.0;
    double mean_time = 0.0;     // s
    double norm_integral = 0.0; // integral over t and x of |j|
    double cutoff_time = 0.0;   // s
    double quadrature_error_estimate = 0.0; // relative, see ArrivalResult
    bool tail_converged = false;
    bool spin_included = false;
};

namespace detail {

// Inner x integral of the chosen current modulus across the detector plane.
// The root argument is quadratic in x, so the kinks (where the current vector
// passes through zero) are its real roots; hand them to the quadrature as
// breakpoints. Truncation at 10 sigma_t keeps the neglected Gaussian mass
// around exp(-50).
inline double transverse_flux(const SpinScenario& sc, double detector_z,
                              double t, bool include_spin,
                              const QuadraturePolicy& policy) {
    const double m = sc.mass, s0 = sc.sigma0;
    const double st = spread_at(s0, m, t);
    const double half_width = 10.0 * st;
    std::vector<double> pts = {0.0};
    if (include_spin) {
        // roots of h2 m^2 + h1(x) m + h0(x) = a x^2 + b x + c
        const double s2 = s0 * s0, s4 = s2 * s2;
        const double dz = detector_z - sc.z_c;
        const double a = 4.0 * hbar * hbar;
        const double b = -16.0 * hbar * hbar * sc.k0 * s2 +
                         16.0 * sc.g * hbar * s2 * t * m;
        const double c =
            hbar * hbar * (16.0 * sc.k0 * sc.k0 * s4 +
                           sc.g * sc.g * t * t * t * t + 4.0 * dz * dz -
                           4.0 * sc.g * t * t * dz) -
            32.0 * sc.g * hbar * s4 * t * sc.k0 * m +
            16.0 * sc.g * sc.g * s4 * t * t * m * m;
        const double disc = b * b - 4.0 * a * c;
        if (disc > 0.0) {
            const double r = std::sqrt(disc);
            pts.push_back((-b - r) / (2.0 * a));
            pts.push_back((-b + r) / (2.0 * a));
        }
    }
    QuadraturePolicy inner = policy;
    // effectively pure relative control; the flux scale varies hugely with t
    inner.abs_tol = std::numeric_limits<double>::min();
    auto f = [&](double x) {
        return include_spin
                   ? spin_current_modulus(sc, x, detector_z, t)
                   : schrodinger_current_modulus(sc, x, detector_z, t);
    };
    pts.insert(pts.begin(), -half_width);
    pts.push_back(half_width);
    try {
        return integrate_with_breakpoints(f, pts, inner).value;
    } catch (const convergence_error& e) {
        return e.best_estimate; // flat-zero stretches trip the rel-tol check
    }
}

} // namespace detail

// Arrival-time mean across the horizontal detector plane z = detector_z,
// using |j| integrated over the transverse coordinate as the (unnormalized)
// arrival density.
inline SpinArrivalResult spin_arrival(const SpinScenario& sc, double detector_z,
                                      bool include_spin,
                                      const QuadraturePolicy& policy = {}) {
    sc.validate();
    if (include_spin) detail::check_spin_closed_form_args(sc, 0.0);
    if (!std::isfinite(detector_z))
        throw validation_error("spin_arrival: detector_z must be finite");

    const GaussianPacketSpec along_z{sc.sigma0, sc.z_c, sc.k0};
    const Scenario fall = Scenario::free_fall(sc.g);
    const double estimate =
        detail::crossing_estimate(along_z, sc.mass, fall, detector_z);
    const double cap =
        policy.cutoff_cap_factor * reference_time(sc.mass, sc.sigma0);

    auto flux = [&](double t) {
        return detail::transverse_flux(sc, detector_z, t, include_spin, policy);
    };
    std::vector<double> features;
    detail::append_pulse_features(along_z, sc.mass, fall, detector_z, features);
    const TailIntegralResult tail =
        integrate_time_tail(flux, estimate, cap, policy, features);
    if (!(tail.norm > 1e-12))
        throw no_arrival_error("spin_arrival: flux integral vanishes");

    SpinArrivalResult res;
    res.detector_z = detector_z;
    res.norm_integral = tail.norm;
    res.mean_time = tail.first_moment / tail.norm;
    res.cutoff_time = tail.cutoff;
    res.tail_converged = tail.converged;
    res.spin_included = include_spin;
    const double quad_rel = tail.norm_error / tail.norm +
                            tail.moment_error / std::abs(tail.first_moment);
    const double drift_rel =
        tail.converged ? 0.0 : 1.5 * tail.tail_drift / res.mean_time;
    res.quadrature_error_estimate = quad_rel + drift_rel;
    return res;
}

struct SpinSweepRow {
    double mass = 0.0;
    double tau_sch = std::numeric_limits<double>::quiet_NaN();
    double tau_spin = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN(); // tau_sch - tau_spin
    std::string error;
};

// delta(m) = tau_Sch - tau_spin at each mass; closes like 1/m^2 toward the
// classical fall time. Discriminating the sign at large mass needs tight
// tolerances, so pass a strict policy for sweeps past ~100 neutron masses.
inline std::vector<SpinSweepRow> spin_mass_sweep(
    const SpinScenario& scenario_template, const std::vector<double>& masses,
    double detector_z, const QuadraturePolicy& policy = {}) {
    if (masses.empty())
        throw validation_error("spin_mass_sweep: masses must be non-empty");
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (!(masses[i] > 0.0))
            throw validation_error("spin_mass_sweep: masses must be > 0");
        if (i > 0 && masses[i] < masses[i - 1])
            throw validation_error("spin_mass_sweep: masses must be sorted ascending");
    }
    std::vector<SpinSweepRow> rows;
    rows.reserve(masses.size());
    for (double m : masses) {
        SpinSweepRow row;
        row.mass = m;
        SpinScenario sc = scenario_template;
        sc.mass = m;
        try {
            row.tau_sch = spin_arrival(sc, detector_z, false, policy).mean_time;
            row.tau_spin = spin_arrival(sc, detector_z, true, policy).mean_time;
            row.delta = row.tau_sch - row.tau_spin;
        } catch (const error& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace weq
