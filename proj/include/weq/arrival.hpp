#pragma once

// Arrival-time distribution Pi(Z,t) = |j1(Z,t)| / integral_0^inf |j1(Z,t')| dt'
// and its first moment tau(Z), plus the mass and separation sweeps built on
// them.
//
// The semi-infinite time integral is truncated by the cutoff-extension loop
// in quadrature.hpp. Free evolution needs the hard cap: at fixed Z the
// spreading outflow decays like 1/t^2, so the first moment grows
// logarithmically in the cutoff and no tail rule can converge. The reported
// error estimate therefore includes the measured per-doubling drift of the
// mean, so that doubling the cutoff moves tau by less than the estimate.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "one_body.hpp"
#include "quadrature.hpp"
#include "wavepacket.hpp"

namespace weq {

struct ArrivalResult {
    double detector_z = 0.0;
    std::vector<double> times;     // s, ascending; kinks of |j1| included
    std::vector<double> pi_values; // 1/s, normalized distribution samples
    double norm_integral = 0.0;    // integral of |j1| dt before normalization
    double mean_time = 0.0;        // s
    double cutoff_time = 0.0;      // s
    // Relative bound covering both the quadrature error of the moments and,
    // when the tail rule did not converge before the cap, the mean's measured
    // drift per cutoff doubling.
    double quadrature_error_estimate = 0.0;
    bool tail_converged = false;
};

namespace detail {

// Rough time at which a packet's probability reaches the detector: classical
// crossing when the center trajectory gets there, otherwise the time for the
// spreading width to bridge the gap. Scale for the integration window only;
// never needs to be precise.
inline double crossing_estimate(const GaussianPacketSpec& spec, double mass,
                                const Scenario& scenario, double detector_z) {
    const double v = hbar * spec.k / mass;
    const double dist = spec.z_c - detector_z;
    const double t_ref = reference_time(mass, spec.sigma0);
    // sigma_t ~ sigma0 t/t_ref for large t, so spreading covers |dist| around
    // t_ref |dist| / (2 sigma0)
    const double t_spread = t_ref * std::abs(dist) / (2.0 * spec.sigma0);
    double t_cross = std::numeric_limits<double>::infinity();
    if (scenario.falling()) {
        const double g = scenario.g;
        const double disc = v * v + 2.0 * g * dist;
        if (disc >= 0.0) {
            const double root = (v + std::sqrt(disc)) / g;
            if (root > 0.0) t_cross = root;
        }
    } else if (v != 0.0) {
        const double root = -dist / v;
        if (root > 0.0) t_cross = root;
    }
    const double estimate = std::min(t_cross, t_spread);
    // Degenerate starts (packet sitting on the detector) leave no usable
    // scale; fall back to the spreading time. A finite ballistic estimate
    // must win unchanged: for heavy packets t_ref grows linearly with mass
    // and any t_ref-based floor would park the integration window (and the
    // pulse feature points) far from the actual arrival.
    if (!(std::isfinite(estimate) && estimate > 0.0)) return 0.25 * t_ref;
    return estimate;
}

inline double pair_crossing_estimate(const TwoBodyConfig& config,
                                     double detector_z) {
    return std::max(crossing_estimate(config.packet_a, config.mass,
                                      config.scenario, detector_z),
                    crossing_estimate(config.packet_b, config.mass,
                                      config.scenario, detector_z));
}

// Times bracketing a packet's current pulse at the detector. For heavy or
// fast packets the pulse is much narrower than the integration chunk and the
// tail loop needs these as breakpoints to not step over it.
inline void append_pulse_features(const GaussianPacketSpec& spec, double mass,
                                  const Scenario& scenario, double detector_z,
                                  std::vector<double>& out) {
    const double t_c = crossing_estimate(spec, mass, scenario, detector_z);
    const double sigma_t = spread_at(spec.sigma0, mass, t_c);
    double speed = std::abs(hbar * spec.k / mass);
    if (scenario.falling())
        speed = std::abs(hbar * spec.k / mass - scenario.g * t_c);
    // pulse duration ~ width / crossing speed; when the packet only spreads
    // onto the detector the pulse lasts about the crossing time itself
    const double width = sigma_t / std::max(speed, sigma_t / t_c);
    for (double f : {-4.0, -1.0, 0.0, 1.0, 4.0}) {
        const double t = t_c + f * width;
        if (t > 0.0) out.push_back(t);
    }
}

inline std::vector<double> arrival_feature_points(const TwoBodyConfig& config,
                                                  double detector_z) {
    std::vector<double> pts;
    append_pulse_features(config.packet_a, config.mass, config.scenario,
                          detector_z, pts);
    append_pulse_features(config.packet_b, config.mass, config.scenario,
                          detector_z, pts);
    return pts;
}

inline double cutoff_cap(const TwoBodyConfig& config,
                         const QuadraturePolicy& policy) {
    const double sigma =
        std::max(config.packet_a.sigma0, config.packet_b.sigma0);
    return policy.cutoff_cap_factor * reference_time(config.mass, sigma);
}

} // namespace detail

inline ArrivalResult arrival_distribution(const TwoBodyConfig& config,
                                          double detector_z,
                                          const QuadraturePolicy& policy,
                                          bool with_samples = true) {
    config.validate();
    policy.validate();
    if (!std::isfinite(detector_z))
        throw validation_error("arrival_distribution: detector_z must be finite");

    const OneBodyEvaluator ev(config);
    auto j = [&](double t) { return ev.current(detector_z, t); };
    const TailIntegralResult tail = integrate_time_tail(
        j, detail::pair_crossing_estimate(config, detector_z),
        detail::cutoff_cap(config, policy), policy,
        detail::arrival_feature_points(config, detector_z));

    if (!(tail.norm > 1e-12))
        throw no_arrival_error(
            "arrival_distribution: |j1| integral below 1e-12; packet never "
            "meaningfully crosses the detector");

    ArrivalResult res;
    res.detector_z = detector_z;
    res.norm_integral = tail.norm;
    res.mean_time = tail.first_moment / tail.norm;
    res.cutoff_time = tail.cutoff;
    res.tail_converged = tail.converged;
    const double quad_rel = tail.norm_error / tail.norm +
                            tail.moment_error / std::abs(tail.first_moment);
    const double drift_rel =
        tail.converged ? 0.0 : 1.5 * tail.tail_drift / res.mean_time;
    res.quadrature_error_estimate = quad_rel + drift_rel;

    if (with_samples) {
        constexpr int n_samples = 1024;
        std::vector<double> ts;
        ts.reserve(n_samples + tail.sign_changes.size());
        for (int i = 0; i < n_samples; ++i)
            ts.push_back(tail.cutoff * i / (n_samples - 1));
        ts.insert(ts.end(), tail.sign_changes.begin(), tail.sign_changes.end());
        std::sort(ts.begin(), ts.end());
        res.times = std::move(ts);
        res.pi_values.reserve(res.times.size());
        for (double t : res.times)
            res.pi_values.push_back(std::abs(ev.current(detector_z, t)) /
                                    tail.norm);
    }
    return res;
}

inline double mean_arrival_time(const TwoBodyConfig& config, double detector_z,
                                const QuadraturePolicy& policy) {
    return arrival_distribution(config, detector_z, policy, false).mean_time;
}

// Single-packet mean arrival time: an MB pair of two copies of the packet has
// rho1 = |psi|^2 and j1 = j_single.
inline double single_packet_mean_arrival(const GaussianPacketSpec& spec,
                                         double mass, const Scenario& scenario,
                                         double detector_z,
                                         const QuadraturePolicy& policy) {
    TwoBodyConfig cfg{spec, spec, StatisticsKind::MB, scenario, mass};
    return mean_arrival_time(cfg, detector_z, policy);
}

struct MassSweepRow {
    double mass = 0.0;
    double tau_be = std::numeric_limits<double>::quiet_NaN();
    double tau_fd = std::numeric_limits<double>::quiet_NaN();
    double tau_mb = std::numeric_limits<double>::quiet_NaN();
    double tau_a = std::numeric_limits<double>::quiet_NaN();
    double tau_b = std::numeric_limits<double>::quiet_NaN();
    std::string error; // empty when every entry computed cleanly
};

// tau for every statistic plus the single-packet times, one row per mass.
// Failures are collected per point; the sweep continues. Rows come back in
// input order. Each row also cross-checks tau_MB against (tau_a+tau_b)/2,
// which must agree whenever the two packets deliver equal |j| norms.
inline std::vector<MassSweepRow> mass_sweep(const TwoBodyConfig& config_template,
                                            const std::vector<double>& masses,
                                            double detector_z,
                                            const QuadraturePolicy& policy = {}) {
    if (masses.empty())
        throw validation_error("mass_sweep: masses must be non-empty");
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (!(masses[i] > 0.0))
            throw validation_error("mass_sweep: masses must be > 0");
        if (i > 0 && masses[i] < masses[i - 1])
            throw validation_error("mass_sweep: masses must be sorted ascending");
    }
    std::vector<MassSweepRow> rows;
    rows.reserve(masses.size());
    for (double m : masses) {
        MassSweepRow row;
        row.mass = m;
        TwoBodyConfig cfg = config_template;
        cfg.mass = m;
        auto compute = [&](StatisticsKind s, double& out, const char* tag) {
            cfg.statistics = s;
            try {
                out = mean_arrival_time(cfg, detector_z, policy);
            } catch (const error& e) {
                if (!row.error.empty()) row.error += "; ";
                row.error += std::string(tag) + ": " + e.what();
            }
        };
        compute(StatisticsKind::BE, row.tau_be, "BE");
        compute(StatisticsKind::FD, row.tau_fd, "FD");
        compute(StatisticsKind::MB, row.tau_mb, "MB");
        try {
            row.tau_a = single_packet_mean_arrival(
                config_template.packet_a, m, config_template.scenario,
                detector_z, policy);
            row.tau_b = single_packet_mean_arrival(
                config_template.packet_b, m, config_template.scenario,
                detector_z, policy);
            if (std::isfinite(row.tau_mb)) {
                const double avg = 0.5 * (row.tau_a + row.tau_b);
                if (std::abs(row.tau_mb - avg) > 1e-4 * row.tau_mb) {
                    if (!row.error.empty()) row.error += "; ";
                    row.error += "MB: deviates from (tau_a+tau_b)/2";
                }
            }
        } catch (const error& e) {
            if (!row.error.empty()) row.error += "; ";
            row.error += std::string("single: ") + e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

struct SeparationSweepRow {
    double z_ca = 0.0;
    double overlap_abs = std::numeric_limits<double>::quiet_NaN();
    double tau_be = std::numeric_limits<double>::quiet_NaN();
    double tau_fd = std::numeric_limits<double>::quiet_NaN();
    double tau_mb = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

// Regenerates the reference tables: one row per z_ca, holding everything else
// at the template.
inline std::vector<SeparationSweepRow> separation_sweep(
    const TwoBodyConfig& config_template, const std::vector<double>& z_ca_values,
    double detector_z, const QuadraturePolicy& policy = {}) {
    if (z_ca_values.empty())
        throw validation_error("separation_sweep: z_ca list must be non-empty");
    std::vector<SeparationSweepRow> rows;
    rows.reserve(z_ca_values.size());
    for (double z_ca : z_ca_values) {
        SeparationSweepRow row;
        row.z_ca = z_ca;
        TwoBodyConfig cfg = config_template;
        cfg.packet_a.z_c = z_ca;
        try {
            row.overlap_abs =
                std::abs(overlap(cfg.packet_a, cfg.packet_b, cfg.scenario));
        } catch (const error& e) {
            row.error = std::string("overlap: ") + e.what();
        }
        auto compute = [&](StatisticsKind s, double& out, const char* tag) {
            cfg.statistics = s;
            try {
                out = mean_arrival_time(cfg, detector_z, policy);
            } catch (const error& e) {
                if (!row.error.empty()) row.error += "; ";
                row.error += std::string(tag) + ": " + e.what();
            }
        };
        compute(StatisticsKind::BE, row.tau_be, "BE");
        compute(StatisticsKind::FD, row.tau_fd, "FD");
        compute(StatisticsKind::MB, row.tau_mb, "MB");
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace weq
