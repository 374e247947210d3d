#pragma once

// Independent grid propagator used to validate the closed-form evolution.
//
// Strang-split spectral stepping: half potential phase, full kinetic phase in
// momentum space, half potential phase. For a linear potential V = m g z both
// sub-flows are exact multiplications, and the only splitting defect is a
// global c-number phase m g^2 T dt^2 / 24 hbar (the nested-commutator term
// [V,[T,V]] is a constant for linear V). We remove that phase analytically at
// the end, which makes the propagator exact to roundoff for free fall at any
// step count -- the remaining error is pure spectral truncation.
//
// The grid is endpoint-excluded and periodic: z_i = z_min + i L / n. Callers
// must size the domain so the packet never nears the boundary; the moment
// helper enforces +-6 sigma coverage before trusting any number it returns.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <fftw3.h>

#include "core.hpp"
#include "wavepacket.hpp"

namespace weq {

struct GridState {
    double z_min = 0.0;
    double z_max = 0.0;
    std::size_t n_points = 0;
    double dt = 0.0; // step of the propagation that produced this state
    std::vector<cplx> values;

    double length() const { return z_max - z_min; }
    double dz() const { return length() / static_cast<double>(n_points); }
    double z_at(std::size_t i) const {
        return z_min + static_cast<double>(i) * dz();
    }

    void validate() const {
        if (!(z_max > z_min))
            throw validation_error("GridState: z_max must exceed z_min");
        if (n_points < 1024 || (n_points & (n_points - 1)) != 0)
            throw validation_error(
                "GridState: n_points must be a power of two >= 1024");
        if (values.size() != n_points)
            throw validation_error("GridState: values size must equal n_points");
    }
};

// Domain and resolution sized from the physics: space for the classical drop
// plus 22 spread widths of tail room, momentum headroom for the initial kick,
// the gravitational boost m g t / hbar, and 12 / sigma0 of intrinsic width.
inline GridState make_initial_state(const GaussianPacketSpec& spec, double mass,
                                    const Scenario& scenario, double t_final) {
    spec.validate();
    scenario.validate();
    if (!(mass > 0.0))
        throw validation_error("make_initial_state: mass must be > 0");
    if (!(t_final > 0.0))
        throw validation_error("make_initial_state: t_final must be > 0");

    const double v = hbar * spec.k / mass;
    double z_end = spec.z_c + v * t_final;
    if (scenario.falling()) z_end -= 0.5 * scenario.g * t_final * t_final;
    const double pad = 22.0 * spread_at(spec.sigma0, mass, t_final);
    const double lo = std::min(spec.z_c, z_end) - pad;
    const double hi = std::max(spec.z_c, z_end) + pad;

    double k_need = std::abs(spec.k) + 12.0 / spec.sigma0;
    if (scenario.falling()) k_need += mass * scenario.g * t_final / hbar;
    const double width = hi - lo;
    std::size_t n = 4096;
    while (static_cast<double>(n) < width * k_need * 2.5 / M_PI) n <<= 1;

    GridState st;
    st.z_min = lo;
    st.z_max = hi;
    st.n_points = n;
    st.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        st.values[i] = evolve(spec, mass, scenario, 0.0, st.z_at(i));
    return st;
}

namespace detail {

inline double grid_norm_sq(const GridState& st) {
    double acc = 0.0;
    for (const cplx& v : st.values) acc += std::norm(v);
    return acc * st.dz();
}

} // namespace detail

// Evolve the state to t_final in n_steps uniform Strang steps. Throws
// step_size_error if the per-step norm drift ever exceeds 1e-10 or the total
// drift 1e-6 (both indicate an under-resolved grid or too coarse a step).
inline GridState propagate(const GridState& initial, double mass,
                           const Scenario& scenario, double t_final,
                           std::size_t n_steps = 2400) {
    initial.validate();
    scenario.validate();
    if (!(mass > 0.0))
        throw validation_error("propagate: mass must be > 0");
    if (!(t_final > 0.0))
        throw validation_error("propagate: t_final must be > 0");
    if (n_steps == 0)
        throw validation_error("propagate: n_steps must be > 0");

    GridState st = initial;
    const std::size_t n = st.n_points;
    const double dt = t_final / static_cast<double>(n_steps);
    st.dt = dt;

    // Momentum grid in FFT ordering.
    std::vector<double> k(n);
    const double dk = 2.0 * M_PI / st.length();
    for (std::size_t i = 0; i < n; ++i) {
        const double j = (i <= n / 2) ? static_cast<double>(i)
                                      : static_cast<double>(i) -
                                            static_cast<double>(n);
        k[i] = dk * j;
    }
    std::vector<cplx> kinetic(n);
    for (std::size_t i = 0; i < n; ++i)
        kinetic[i] = std::exp(cplx(0.0, -hbar * k[i] * k[i] * dt / (2.0 * mass)));

    std::vector<cplx> half_potential(n, cplx(1.0, 0.0));
    if (scenario.falling()) {
        for (std::size_t i = 0; i < n; ++i)
            half_potential[i] = std::exp(
                cplx(0.0, -mass * scenario.g * st.z_at(i) * dt / (2.0 * hbar)));
    }

    fftw_complex* buf = reinterpret_cast<fftw_complex*>(st.values.data());
    fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf,
                                     FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf,
                                     FFTW_BACKWARD, FFTW_ESTIMATE);
    const double inv_n = 1.0 / static_cast<double>(n);

    const double norm0 = detail::grid_norm_sq(st);
    double prev = norm0;
    for (std::size_t step = 0; step < n_steps; ++step) {
        for (std::size_t i = 0; i < n; ++i) st.values[i] *= half_potential[i];
        fftw_execute(fwd);
        for (std::size_t i = 0; i < n; ++i) st.values[i] *= kinetic[i] * inv_n;
        fftw_execute(bwd);
        for (std::size_t i = 0; i < n; ++i) st.values[i] *= half_potential[i];

        const double cur = detail::grid_norm_sq(st);
        if (std::abs(cur - prev) > 1e-10 * norm0) {
            fftw_destroy_plan(fwd);
            fftw_destroy_plan(bwd);
            throw step_size_error(
                "propagate: per-step norm drift exceeded 1e-10");
        }
        prev = cur;
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    if (std::abs(prev - norm0) > 1e-6 * norm0)
        throw step_size_error("propagate: accumulated norm drift exceeded 1e-6");

    if (scenario.falling()) {
        const double g = scenario.g;
        const cplx phase =
            std::exp(cplx(0.0, -mass * g * g * t_final * dt * dt / (24.0 * hbar)));
        for (cplx& v : st.values) v *= phase;
    }
    return st;
}

struct GridMoments {
    double norm = 0.0;   // integral of |psi|^2
    double mean = 0.0;   // <z>
    double spread = 0.0; // sqrt(<z^2> - <z>^2)
};

// Composite-Simpson moments of |psi|^2 on the grid (3/8 rule closes the odd
// leftover interval). Refuses to answer when the packet is not comfortably
// inside the domain: the mean +- 6 spreads must fit, i.e. 12 spreads covered.
inline GridMoments brute_force_moments(const GridState& state) {
    state.validate();
    const std::size_t n = state.n_points;
    const double h = state.dz();

    std::vector<double> rho(n);
    for (std::size_t i = 0; i < n; ++i) rho[i] = std::norm(state.values[i]);

    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    auto accum = [&](std::size_t i, double w) {
        const double z = state.z_at(i);
        m0 += w * rho[i];
        m1 += w * rho[i] * z;
        m2 += w * rho[i] * z * z;
    };
    // n-1 intervals total: Simpson 1/3 over the first n-4, 3/8 over the last 3
    const std::size_t last13 = n - 4; // inclusive right edge of the 1/3 part
    accum(0, h / 3.0);
    for (std::size_t i = 1; i < last13; ++i)
        accum(i, (i % 2 == 1 ? 4.0 : 2.0) * h / 3.0);
    accum(last13, h / 3.0);
    accum(last13, 3.0 * h / 8.0);
    accum(last13 + 1, 9.0 * h / 8.0);
    accum(last13 + 2, 9.0 * h / 8.0);
    accum(last13 + 3, 3.0 * h / 8.0);

    if (!(m0 > 0.0))
        throw numerical_error("brute_force_moments: zero total density");
    GridMoments out;
    out.norm = m0;
    out.mean = m1 / m0;
    const double var = m2 / m0 - out.mean * out.mean;
    out.spread = std::sqrt(std::max(var, 0.0));

    if (out.mean - 6.0 * out.spread < state.z_min ||
        out.mean + 6.0 * out.spread > state.z_max)
        throw coverage_error(
            "brute_force_moments: grid covers less than 12 spreads around the "
            "packet");
    return out;
}

// L2 distance between the grid state and a closed-form amplitude evaluated on
// the same points, normalized by the closed form's own grid norm.
template <typename Amplitude>
inline double l2_distance(const GridState& state, Amplitude&& amplitude) {
    state.validate();
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < state.n_points; ++i) {
        const cplx exact = amplitude(state.z_at(i));
        diff += std::norm(state.values[i] - exact);
        ref += std::norm(exact);
    }
    if (!(ref > 0.0))
        throw numerical_error("l2_distance: reference amplitude vanishes");
    return std::sqrt(diff / ref);
}

} // namespace weq
