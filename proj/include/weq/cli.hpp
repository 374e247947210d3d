#pragma once

// Batch front end. Every subcommand reads a flat key=value config (CLI11
// config file) plus command-line overrides and writes a deterministic CSV:
// '#'-prefixed metadata lines (no timestamps), one plain header row, data
// rows. All emitted quantities are dimensionless -- times divided by
// t_ref = 2 m_n sigma0^2 / hbar (at the reference neutron mass, echoed in the
// header), lengths by sigma0, masses by m_n.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure,
// 3 verification failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "weq.hpp"

namespace weq::cli {

struct RunConfig {
    double sigma0_um = 10.0; // packet width, micrometers
    double z_ca = std::numeric_limits<double>::quiet_NaN(); // sigma0 units
    double z_cb = 8.0;                                      // sigma0 units
    double separation = std::numeric_limits<double>::quiet_NaN(); // z_ca-z_cb
    // kicks in 1/sigma0 units; NaN = per-scenario defaults (-2 free, 0 fall)
    double k_a = std::numeric_limits<double>::quiet_NaN();
    double k_b = std::numeric_limits<double>::quiet_NaN();
    double mass = 1.0;           // m_n units
    double g = 10.0;             // m/s^2
    std::string scenario;        // free | fall | both; default per command
    std::string statistics = "all"; // echoed; all three columns always emitted
    double detector_z = 0.0;        // sigma0 units
    std::string z_ca_list = "10,11,12,13"; // sigma0 units
    double mass_min = 0.25, mass_max = 100.0; // m_n units
    int mass_points = 40;
    double spin_z_c = 8.0;  // sigma0 units
    double spin_k0 = 0.0;   // 1/sigma0 units
    std::string spin_mass_list = "1,2,5,10,20,50,100"; // m_n units
    std::string format = "csv";
    std::string out;
    bool quick = false;

    // Quadrature overrides; NaN / -1 mean "use the command's default".
    double abs_tol = std::numeric_limits<double>::quiet_NaN();
    double rel_tol = std::numeric_limits<double>::quiet_NaN();
    int max_subdivisions = -1;
    double initial_cutoff_factor = std::numeric_limits<double>::quiet_NaN();
    double tail_fraction = std::numeric_limits<double>::quiet_NaN();
    double cutoff_cap_factor = std::numeric_limits<double>::quiet_NaN();

    double sigma0() const { return sigma0_um * 1e-6; }
    double mass_kg() const { return mass * constants().neutron_mass; }
    // Fixed output normalization: the reference (neutron-mass) spreading time.
    double t_ref() const {
        return reference_time(constants().neutron_mass, sigma0());
    }
};

namespace detail {

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::vector<double> parse_number_list(const std::string& text,
                                             const char* field) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            while (used < item.size() && std::isspace(item[used])) ++used;
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw validation_error(std::string(field) +
                                   ": cannot parse list entry '" + item + "'");
        }
    }
    if (out.empty())
        throw validation_error(std::string(field) + ": empty list");
    return out;
}

// CSV cell for free-text error messages: keep the delimiter unambiguous.
inline std::string sanitize_cell(std::string s, char delim) {
    std::replace(s.begin(), s.end(), delim, ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

class TableWriter {
public:
    TableWriter(const std::string& path, char delim)
        : path_(path), delim_(delim), file_(path, std::ios::binary) {
        if (!file_)
            throw validation_error("cannot open output file '" + path + "'");
    }

    void meta(const std::string& key, const std::string& value) {
        file_ << "# " << key << ": " << value << "\n";
    }
    void meta(const std::string& key, double value) { meta(key, fmt(value)); }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) file_ << delim_;
            file_ << cells[i];
        }
        file_ << "\n";
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    char delim_;
    std::ofstream file_;
};

inline char delimiter_for(const RunConfig& rc) {
    if (rc.format == "csv") return ',';
    if (rc.format == "tsv") return '\t';
    throw validation_error("format: must be 'csv' or 'tsv'");
}

inline QuadraturePolicy resolve_policy(const RunConfig& rc,
                                       QuadraturePolicy defaults) {
    QuadraturePolicy p = defaults;
    if (!std::isnan(rc.abs_tol)) p.abs_tol = rc.abs_tol;
    if (!std::isnan(rc.rel_tol)) p.rel_tol = rc.rel_tol;
    if (rc.max_subdivisions >= 0) p.max_subdivisions = rc.max_subdivisions;
    if (!std::isnan(rc.initial_cutoff_factor))
        p.initial_cutoff_factor = rc.initial_cutoff_factor;
    if (!std::isnan(rc.tail_fraction)) p.tail_fraction = rc.tail_fraction;
    if (!std::isnan(rc.cutoff_cap_factor))
        p.cutoff_cap_factor = rc.cutoff_cap_factor;
    p.validate();
    return p;
}

inline Scenario parse_scenario(const std::string& name, double g) {
    if (name == "free") return Scenario::free_evolution();
    if (name == "fall") return Scenario::free_fall(g);
    throw validation_error("scenario: must be 'free' or 'fall' here, got '" +
                           name + "'");
}

inline double resolved_z_ca(const RunConfig& rc, double fallback) {
    if (!std::isnan(rc.separation)) return rc.z_cb + rc.separation;
    if (!std::isnan(rc.z_ca)) return rc.z_ca;
    return fallback;
}

// Reference parameter sets: the free-evolution runs launch both packets at the
// detector with k = -2/sigma0; the fall runs drop them from rest.
inline double default_kick(const Scenario& scenario) {
    return scenario.falling() ? 0.0 : -2.0;
}

inline double resolved_k_a(const RunConfig& rc, const Scenario& scenario) {
    return std::isnan(rc.k_a) ? default_kick(scenario) : rc.k_a;
}

inline double resolved_k_b(const RunConfig& rc, const Scenario& scenario) {
    return std::isnan(rc.k_b) ? default_kick(scenario) : rc.k_b;
}

inline TwoBodyConfig make_pair_config(const RunConfig& rc, double z_ca_sigma,
                                      StatisticsKind stats,
                                      const Scenario& scenario) {
    const double s0 = rc.sigma0();
    TwoBodyConfig cfg;
    cfg.packet_a = {s0, z_ca_sigma * s0, resolved_k_a(rc, scenario) / s0};
    cfg.packet_b = {s0, rc.z_cb * s0, resolved_k_b(rc, scenario) / s0};
    cfg.statistics = stats;
    cfg.scenario = scenario;
    cfg.mass = rc.mass_kg();
    return cfg;
}

inline void echo_common_meta(TableWriter& w, const RunConfig& rc,
                             const char* command) {
    w.meta("command", command);
    w.meta("version", version_string);
    w.meta("sigma0_um", rc.sigma0_um);
    w.meta("z_cb_sigma0", rc.z_cb);
    w.meta("mass_mn", rc.mass);
    w.meta("g", rc.g);
    w.meta("detector_z_sigma0", rc.detector_z);
    w.meta("t_ref_s", rc.t_ref());
    w.meta("normalization", "times / t_ref, lengths / sigma0, masses / m_n");
}

inline void echo_policy_meta(TableWriter& w, const QuadraturePolicy& p) {
    w.meta("quad_abs_tol", p.abs_tol);
    w.meta("quad_rel_tol", p.rel_tol);
    w.meta("quad_max_subdivisions", static_cast<double>(p.max_subdivisions));
    w.meta("quad_initial_cutoff_factor", p.initial_cutoff_factor);
    w.meta("quad_tail_fraction", p.tail_fraction);
    w.meta("quad_cutoff_cap_factor", p.cutoff_cap_factor);
}

// out.csv -> out_zca10.csv etc. when several files are produced.
inline std::string suffixed_path(const std::string& base,
                                 const std::string& tag) {
    const std::size_t slash = base.find_last_of('/');
    const std::size_t dot = base.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return base + "_" + tag;
    return base.substr(0, dot) + "_" + tag + base.substr(dot);
}

} // namespace detail

// --- arrival-dist ---------------------------------------------------------

inline int cmd_arrival_dist(const RunConfig& rc) {
    const QuadraturePolicy policy = detail::resolve_policy(rc, {});
    const Scenario scenario =
        detail::parse_scenario(rc.scenario.empty() ? "free" : rc.scenario, rc.g);
    std::vector<double> z_cas;
    if (!std::isnan(rc.z_ca) || !std::isnan(rc.separation))
        z_cas.push_back(detail::resolved_z_ca(rc, 10.0));
    else
        z_cas = detail::parse_number_list(rc.z_ca_list, "z_ca_list");

    const double s0 = rc.sigma0();
    const double t_ref = rc.t_ref();
    const double detector = rc.detector_z * s0;
    const std::string base = rc.out.empty() ? "arrival_dist.csv" : rc.out;
    const char delim = detail::delimiter_for(rc);

    for (double z_ca : z_cas) {
        struct StatData {
            StatisticsKind kind;
            const char* tag;
            double norm = 0.0;
            double cutoff = 0.0;
            double mean = 0.0;
            bool ok = false;
            std::string error;
        };
        std::vector<StatData> stats = {{StatisticsKind::BE, "be", 0, 0, 0, false, {}},
                                       {StatisticsKind::FD, "fd", 0, 0, 0, false, {}},
                                       {StatisticsKind::MB, "mb", 0, 0, 0, false, {}}};
        double t_max = 0.0;
        for (StatData& sd : stats) {
            try {
                const TwoBodyConfig cfg =
                    detail::make_pair_config(rc, z_ca, sd.kind, scenario);
                const ArrivalResult r =
                    arrival_distribution(cfg, detector, policy, false);
                sd.norm = r.norm_integral;
                sd.cutoff = r.cutoff_time;
                sd.mean = r.mean_time;
                sd.ok = true;
                t_max = std::max(t_max, r.cutoff_time);
            } catch (const weq::error& e) {
                sd.error = e.what();
            }
        }
        if (t_max == 0.0) {
            std::string why;
            for (const StatData& sd : stats)
                why += std::string("; ") + sd.tag + ": " + sd.error;
            throw numerical_error("arrival-dist: no statistics computable at "
                                  "z_ca = " + detail::fmt(z_ca) + why);
        }

        const std::string path =
            z_cas.size() == 1
                ? base
                : detail::suffixed_path(base, "zca" + detail::fmt(z_ca));
        detail::TableWriter w(path, delim);
        detail::echo_common_meta(w, rc, "arrival-dist");
        w.meta("scenario", scenario.falling() ? "fall" : "free");
        w.meta("statistics", rc.statistics);
        w.meta("z_ca_sigma0", z_ca);
        w.meta("k_a_per_sigma0", detail::resolved_k_a(rc, scenario));
        w.meta("k_b_per_sigma0", detail::resolved_k_b(rc, scenario));
        detail::echo_policy_meta(w, policy);
        for (const StatData& sd : stats) {
            const std::string tag = sd.tag;
            if (sd.ok) {
                w.meta("norm_integral_" + tag, sd.norm);
                w.meta("mean_time_" + tag + "_tref", sd.mean / t_ref);
            } else {
                w.meta("error_" + tag, detail::sanitize_cell(sd.error, delim));
            }
        }
        w.meta("cutoff_tref", t_max / t_ref);

        // common uniform time grid; Pi = |j1|/norm per statistic
        std::vector<OneBodyEvaluator> evs;
        std::vector<int> ev_index(stats.size(), -1);
        for (std::size_t i = 0; i < stats.size(); ++i) {
            if (!stats[i].ok) continue;
            ev_index[i] = static_cast<int>(evs.size());
            evs.emplace_back(detail::make_pair_config(rc, z_ca, stats[i].kind,
                                                      scenario));
        }
        w.row({"t_over_tref", "pi_be_tref", "pi_fd_tref", "pi_mb_tref"});
        constexpr int n_samples = 1024;
        for (int i = 0; i < n_samples; ++i) {
            const double t = t_max * i / (n_samples - 1);
            std::vector<std::string> cells = {detail::fmt(t / t_ref)};
            for (std::size_t s = 0; s < stats.size(); ++s) {
                if (ev_index[s] < 0) {
                    cells.push_back("nan");
                    continue;
                }
                const double j = evs[static_cast<std::size_t>(ev_index[s])]
                                     .current(detector, t);
                cells.push_back(
                    detail::fmt(std::abs(j) / stats[s].norm * t_ref));
            }
            w.row(cells);
        }
        std::cout << "wrote " << path << "\n";
    }
    return 0;
}

// --- tables ----------------------------------------------------------------

inline int cmd_tables(const RunConfig& rc) {
    const QuadraturePolicy policy = detail::resolve_policy(rc, {});
    std::vector<Scenario> scenarios;
    const std::string which = rc.scenario.empty() ? "both" : rc.scenario;
    if (which == "free" || which == "both")
        scenarios.push_back(Scenario::free_evolution());
    if (which == "fall" || which == "both")
        scenarios.push_back(Scenario::free_fall(rc.g));
    if (scenarios.empty())
        throw validation_error("scenario: must be free, fall or both");

    std::vector<double> z_cas;
    if (!std::isnan(rc.z_ca) || !std::isnan(rc.separation))
        z_cas.push_back(detail::resolved_z_ca(rc, 10.0));
    else
        z_cas = detail::parse_number_list(rc.z_ca_list, "z_ca_list");

    const double s0 = rc.sigma0();
    const double t_ref = rc.t_ref();
    const double detector = rc.detector_z * s0;
    const char delim = detail::delimiter_for(rc);
    const std::string path = rc.out.empty() ? "tables.csv" : rc.out;
    detail::TableWriter w(path, delim);
    detail::echo_common_meta(w, rc, "tables");
    for (const Scenario& scenario : scenarios) {
        const std::string suffix = scenario.falling() ? "_fall" : "_free";
        w.meta("k_a_per_sigma0" + suffix, detail::resolved_k_a(rc, scenario));
        w.meta("k_b_per_sigma0" + suffix, detail::resolved_k_b(rc, scenario));
    }
    detail::echo_policy_meta(w, policy);
    w.row({"scenario", "z_ca_sigma0", "overlap", "tau_be_tref", "tau_fd_tref",
           "tau_mb_tref", "error"});

    for (const Scenario& scenario : scenarios) {
        TwoBodyConfig tmpl =
            detail::make_pair_config(rc, z_cas.front(), StatisticsKind::BE,
                                     scenario);
        std::vector<double> z_abs;
        z_abs.reserve(z_cas.size());
        for (double z : z_cas) z_abs.push_back(z * s0);
        const std::vector<SeparationSweepRow> rows =
            separation_sweep(tmpl, z_abs, detector, policy);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const SeparationSweepRow& r = rows[i];
            w.row({scenario.falling() ? "fall" : "free",
                   detail::fmt(z_cas[i]), detail::fmt(r.overlap_abs),
                   detail::fmt(r.tau_be / t_ref), detail::fmt(r.tau_fd / t_ref),
                   detail::fmt(r.tau_mb / t_ref),
                   detail::sanitize_cell(r.error, delim)});
        }
    }
    std::cout << "wrote " << path << "\n";
    return 0;
}

// --- mass-sweep -------------------------------------------------------------

inline int cmd_mass_sweep(const RunConfig& rc) {
    const QuadraturePolicy policy = detail::resolve_policy(rc, {});
    const Scenario scenario =
        detail::parse_scenario(rc.scenario.empty() ? "fall" : rc.scenario, rc.g);
    if (!(rc.mass_points >= 1))
        throw validation_error("mass_points: must be >= 1");
    if (!(rc.mass_min > 0.0) || !(rc.mass_max >= rc.mass_min))
        throw validation_error("mass grid: need 0 < mass_min <= mass_max");

    const double m_n = constants().neutron_mass;
    std::vector<double> masses;
    masses.reserve(static_cast<std::size_t>(rc.mass_points));
    for (int i = 0; i < rc.mass_points; ++i) {
        const double f = rc.mass_points == 1
                             ? 0.0
                             : static_cast<double>(i) / (rc.mass_points - 1);
        masses.push_back(m_n * rc.mass_min *
                         std::pow(rc.mass_max / rc.mass_min, f));
    }

    const double s0 = rc.sigma0();
    const double t_ref = rc.t_ref();
    const double detector = rc.detector_z * s0;
    const double z_ca = detail::resolved_z_ca(rc, 10.0);
    const TwoBodyConfig tmpl =
        detail::make_pair_config(rc, z_ca, StatisticsKind::BE, scenario);

    const std::vector<MassSweepRow> rows =
        mass_sweep(tmpl, masses, detector, policy);

    const char delim = detail::delimiter_for(rc);
    const std::string path = rc.out.empty() ? "mass_sweep.csv" : rc.out;
    detail::TableWriter w(path, delim);
    detail::echo_common_meta(w, rc, "mass-sweep");
    w.meta("scenario", scenario.falling() ? "fall" : "free");
    w.meta("z_ca_sigma0", z_ca);
    w.meta("k_a_per_sigma0", detail::resolved_k_a(rc, scenario));
    w.meta("k_b_per_sigma0", detail::resolved_k_b(rc, scenario));
    w.meta("mass_grid",
           detail::fmt(rc.mass_min) + ".." + detail::fmt(rc.mass_max) + " x " +
               std::to_string(rc.mass_points) + " (log)");
    detail::echo_policy_meta(w, policy);
    w.row({"m_over_mn", "tau_be_tref", "tau_fd_tref", "tau_mb_tref",
           "tau_a_tref", "tau_b_tref", "mean_z_plus0_sigma0",
           "mean_z_minus0_sigma0", "dz_plus_tplus_sigma0",
           "dz_minus_tminus_sigma0", "error"});

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const MassSweepRow& r : rows) {
        std::string err = r.error;
        double mean_p = nan, mean_m = nan, dz_p = nan, dz_m = nan;
        TwoBodyConfig cfg = tmpl;
        cfg.mass = r.mass;
        // initial rho1 centers and the widths at the closed-form
        // center-crossing times
        const double sum =
            cfg.packet_a.z_c + cfg.packet_b.z_c - 2.0 * detector;
        auto fig_cols = [&](StatisticsKind s, double& mean0, double& dz) {
            cfg.statistics = s;
            try {
                mean0 = mean_position(cfg, 0.0) / s0;
                dz = position_spread(cfg, center_crossing_time(cfg, sum)) / s0;
            } catch (const weq::error& e) {
                if (!err.empty()) err += "; ";
                err += std::string(statistics_name(s)) + " columns: " + e.what();
            }
        };
        fig_cols(StatisticsKind::BE, mean_p, dz_p);
        fig_cols(StatisticsKind::FD, mean_m, dz_m);
        w.row({detail::fmt(r.mass / m_n), detail::fmt(r.tau_be / t_ref),
               detail::fmt(r.tau_fd / t_ref), detail::fmt(r.tau_mb / t_ref),
               detail::fmt(r.tau_a / t_ref), detail::fmt(r.tau_b / t_ref),
               detail::fmt(mean_p), detail::fmt(mean_m), detail::fmt(dz_p),
               detail::fmt(dz_m), detail::sanitize_cell(err, delim)});
    }
    std::cout << "wrote " << path << "\n";
    return 0;
}

// --- spin-sweep -------------------------------------------------------------

inline int cmd_spin_sweep(const RunConfig& rc) {
    // The spin/no-spin gap shrinks like 1/m^2, so the command defaults to much
    // tighter tolerances than the scalar sweeps; explicit overrides win.
    QuadraturePolicy defaults;
    defaults.abs_tol = 1e-18;
    defaults.rel_tol = 1e-12;
    defaults.tail_fraction = 1e-11;
    const QuadraturePolicy policy = detail::resolve_policy(rc, defaults);

    const double m_n = constants().neutron_mass;
    const double s0 = rc.sigma0();
    const double t_ref = rc.t_ref();
    std::vector<double> masses =
        detail::parse_number_list(rc.spin_mass_list, "spin_mass_list");
    std::sort(masses.begin(), masses.end());
    for (double& m : masses) m *= m_n;

    SpinScenario tmpl;
    tmpl.sigma0 = s0;
    tmpl.z_c = rc.spin_z_c * s0;
    tmpl.k0 = rc.spin_k0 / s0;
    tmpl.g = rc.g;

    const std::vector<SpinSweepRow> rows =
        spin_mass_sweep(tmpl, masses, rc.detector_z * s0, policy);

    const char delim = detail::delimiter_for(rc);
    const std::string path = rc.out.empty() ? "spin_sweep.csv" : rc.out;
    detail::TableWriter w(path, delim);
    detail::echo_common_meta(w, rc, "spin-sweep");
    w.meta("spin_z_c_sigma0", rc.spin_z_c);
    w.meta("spin_k0_per_sigma0", rc.spin_k0);
    w.meta("spin_axis", "+y");
    detail::echo_policy_meta(w, policy);
    w.row({"m_over_mn", "tau_sch_tref", "tau_spin_tref", "delta_tref",
           "error"});
    for (const SpinSweepRow& r : rows)
        w.row({detail::fmt(r.mass / m_n), detail::fmt(r.tau_sch / t_ref),
               detail::fmt(r.tau_spin / t_ref), detail::fmt(r.delta / t_ref),
               detail::sanitize_cell(r.error, delim)});
    std::cout << "wrote " << path << "\n";
    return 0;
}

// --- verify -----------------------------------------------------------------

namespace detail {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

class VerifyReport {
public:
    void add(const std::string& name, bool pass, const std::string& detail) {
        results_.push_back({name, pass, detail});
    }

    template <class Fn>
    void run(const std::string& name, Fn&& fn) {
        try {
            fn(*this, name);
        } catch (const weq::error& e) {
            add(name, false, std::string("exception: ") + e.what());
        }
    }

    int finish(std::ostream& os) const {
        int passed = 0;
        for (const CheckResult& r : results_) {
            os << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": "
               << r.detail << "\n";
            passed += r.pass ? 1 : 0;
        }
        os << "verify: " << passed << "/" << results_.size()
           << " checks passed\n";
        return passed == static_cast<int>(results_.size()) ? 0 : 3;
    }

private:
    std::vector<CheckResult> results_;
};

// rho1 assembled from its defining ingredients rather than through
// OneBodyEvaluator, so the negative-control hook can perturb N without
// touching library code: setting WEQ_DEBUG_PERTURB_NORM scales N+- by 1%.
inline double rho1_from_parts(const TwoBodyConfig& cfg, double z, double t,
                              double n_fault) {
    const cplx pa = evolve(cfg.packet_a, cfg.mass, cfg.scenario, t, z);
    const cplx pb = evolve(cfg.packet_b, cfg.mass, cfg.scenario, t, z);
    if (cfg.statistics == StatisticsKind::MB)
        return 0.5 * (std::norm(pa) + std::norm(pb));
    const cplx ov = overlap(cfg.packet_a, cfg.packet_b, cfg.scenario);
    const double n =
        normalization(cfg.packet_a, cfg.packet_b, cfg.statistics,
                      cfg.scenario) *
        n_fault;
    const double sign = exchange_sign(cfg.statistics);
    return n * n *
           (std::norm(pa) + std::norm(pb) +
            sign * 2.0 * std::real(ov * pa * std::conj(pb)));
}

inline cplx grid_overlap(const GaussianPacketSpec& a,
                         const GaussianPacketSpec& b, double mass,
                         const Scenario& scenario, double t) {
    const double st = spread_at(std::max(a.sigma0, b.sigma0), mass, t);
    const double g = scenario.accel();
    const double drop = 0.5 * g * t * t;
    const double za = a.z_c + hbar * a.k * t / mass - drop;
    const double zb = b.z_c + hbar * b.k * t / mass - drop;
    const double lo = std::min(za, zb) - 25.0 * st;
    const double hi = std::max(za, zb) + 25.0 * st;
    constexpr int n = 16384;
    const double h = (hi - lo) / n;
    cplx acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double z = lo + h * i;
        const double wgt = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += wgt * std::conj(cplx(evolve(a, mass, scenario, t, z))) *
               cplx(evolve(b, mass, scenario, t, z));
    }
    return acc * h;
}

} // namespace detail

inline int cmd_verify(const RunConfig& rc, std::ostream& os) {
    const double s0 = rc.sigma0();
    const double m_n = constants().neutron_mass;
    const double t_ref = rc.t_ref();
    const double n_fault =
        std::getenv("WEQ_DEBUG_PERTURB_NORM") != nullptr ? 1.01 : 1.0;
    QuadraturePolicy tight;
    tight.abs_tol = 1e-13;
    tight.rel_tol = 1e-12;

    detail::VerifyReport rep;
    using R = detail::VerifyReport;

    rep.run("reference_time", [&](R& r, const std::string& name) {
        const double rel = std::abs(t_ref - 3.165e-3) / 3.165e-3;
        r.add(name, rel < 2e-3,
              "t_ref = " + detail::fmt(t_ref) + " s, " + detail::fmt(rel * 100) +
                  "% from 3.165 ms");
    });
    rep.run("characteristic_mass", [&](R& r, const std::string& name) {
        const double m0 = characteristic_mass(rc.g, s0);
        const double rel = std::abs(m0 - 1.055e-27) / 1.055e-27;
        r.add(name, rel < 2e-3,
              "m0 = " + detail::fmt(m0) + " kg, " + detail::fmt(rel * 100) +
                  "% from 1.055e-27 kg");
    });
    rep.run("overlap_golden", [&](R& r, const std::string& name) {
        const Scenario sc = Scenario::free_fall(rc.g);
        const double o2 = std::abs(
            overlap({s0, 10 * s0, 0}, {s0, 8 * s0, 0}, sc)); // dz = 2 sigma0
        const double o5 = std::abs(
            overlap({s0, 13 * s0, 0}, {s0, 8 * s0, 0}, sc)); // dz = 5 sigma0
        const bool ok = std::abs(o2 - std::exp(-0.5)) < 1e-12 &&
                        std::abs(o5 - 0.04393693) < 1e-7;
        r.add(name, ok,
              "|<a|b>|(2 sigma0) = " + detail::fmt(o2) + ", (5 sigma0) = " +
                  detail::fmt(o5));
    });

    rep.run("normalization", [&](R& r, const std::string& name) {
        double worst = 0.0;
        const std::vector<StatisticsKind> stats = {
            StatisticsKind::BE, StatisticsKind::FD, StatisticsKind::MB};
        const std::vector<Scenario> scens = {Scenario::free_evolution(),
                                             Scenario::free_fall(rc.g)};
        const std::vector<double> times = {0.0, 0.9 * t_ref, 2.7 * t_ref};
        for (const Scenario& scen : scens)
            for (StatisticsKind st : stats)
                for (double t : times) {
                    TwoBodyConfig cfg =
                        detail::make_pair_config(rc, 10.0, st, scen);
                    const double g = scen.accel();
                    const double drop = 0.5 * g * t * t;
                    const double za = cfg.packet_a.z_c - drop;
                    const double zb = cfg.packet_b.z_c - drop;
                    const double w = 40.0 * spread_at(s0, cfg.mass, t);
                    auto f = [&](double z) {
                        return detail::rho1_from_parts(cfg, z, t, n_fault);
                    };
                    const double total =
                        integrate_with_breakpoints(
                            f, {std::min(za, zb) - w, za, zb,
                                std::max(za, zb) + w},
                            tight)
                            .value;
                    worst = std::max(worst, std::abs(total - 1.0));
                }
        r.add(name, worst < 1e-8,
              "max |int rho1 - 1| = " + detail::fmt(worst) +
                  (n_fault != 1.0 ? " (fault injection active)" : ""));
    });

    rep.run("continuity", [&](R& r, const std::string& name) {
        std::mt19937 rng(20250817);
        std::uniform_real_distribution<double> ut(0.1, 2.5);
        std::uniform_real_distribution<double> uz(-3.0, 3.0);
        double worst = 0.0;
        for (const Scenario& scen :
             {Scenario::free_evolution(), Scenario::free_fall(rc.g)})
            for (StatisticsKind st : {StatisticsKind::BE, StatisticsKind::FD,
                                      StatisticsKind::MB})
                for (int i = 0; i < 25; ++i) {
                    const TwoBodyConfig cfg =
                        detail::make_pair_config(rc, 10.0, st, scen);
                    const OneBodyEvaluator ev(cfg);
                    const double t = ut(rng) * t_ref;
                    const double stw = spread_at(s0, cfg.mass, t);
                    const double drop = 0.5 * scen.accel() * t * t;
                    const double z =
                        0.5 * (cfg.packet_a.z_c + cfg.packet_b.z_c) - drop +
                        uz(rng) * stw;
                    const double ht = 1e-6 * t_ref, hz = 1e-6 * s0;
                    const double drho_dt =
                        (ev.rho(z, t + ht) - ev.rho(z, t - ht)) / (2.0 * ht);
                    const double dj_dz =
                        (ev.current(z + hz, t) - ev.current(z - hz, t)) /
                        (2.0 * hz);
                    const double scale =
                        std::abs(drho_dt) + std::abs(dj_dz) +
                        ev.rho(z, t) / t_ref + 1e-300;
                    worst = std::max(worst,
                                     std::abs(drho_dt + dj_dz) / scale);
                }
        r.add(name, worst < 1e-5,
              "max continuity residual (rel) = " + detail::fmt(worst));
    });

    rep.run("overlap_time_invariance", [&](R& r, const std::string& name) {
        double worst = 0.0;
        for (const Scenario& scen :
             {Scenario::free_evolution(), Scenario::free_fall(rc.g)})
            for (double t : {0.7 * t_ref, 2.3 * t_ref}) {
                const GaussianPacketSpec a{s0, 10 * s0, 0.0};
                const GaussianPacketSpec b{s0, 8 * s0, 0.0};
                const cplx num = detail::grid_overlap(a, b, m_n, scen, t);
                worst = std::max(worst, std::abs(num - overlap(a, b, scen)));
            }
        r.add(name, worst < 1e-6,
              "max |<a|b>(t) - <a|b>(0)| = " + detail::fmt(worst));
    });

    rep.run("g_independence", [&](R& r, const std::string& name) {
        const GaussianPacketSpec a{s0, 10 * s0, 0.0};
        const GaussianPacketSpec b{s0, 8 * s0, 0.0};
        const cplx c1 = overlap(a, b, Scenario::free_fall(1.0));
        const cplx c100 = overlap(a, b, Scenario::free_fall(100.0));
        const bool bitwise = c1.real() == c100.real() &&
                             c1.imag() == c100.imag();
        const cplx n1 =
            detail::grid_overlap(a, b, m_n, Scenario::free_fall(1.0), t_ref);
        const cplx n100 =
            detail::grid_overlap(a, b, m_n, Scenario::free_fall(100.0), t_ref);
        const double diff = std::abs(n1 - n100);
        r.add(name, bitwise && diff < 1e-10,
              std::string("closed form bitwise ") + (bitwise ? "equal" : "UNEQUAL") +
                  ", grid overlap |g=1 - g=100| = " + detail::fmt(diff));
    });

    rep.run("mean_position_consistency", [&](R& r, const std::string& name) {
        const TwoBodyConfig cfg = detail::make_pair_config(
            rc, 10.0, StatisticsKind::BE, Scenario::free_fall(rc.g));
        const double t = 0.8 * t_ref;
        const OneBodyEvaluator ev(cfg);
        const double drop = 0.5 * rc.g * t * t;
        const double za = cfg.packet_a.z_c - drop, zb = cfg.packet_b.z_c - drop;
        const double w = 40.0 * spread_at(s0, cfg.mass, t);
        auto p0 = [&](double z) { return ev.rho(z, t); };
        auto p1 = [&](double z) { return z * ev.rho(z, t); };
        const std::vector<double> pts = {std::min(za, zb) - w, za, zb,
                                         std::max(za, zb) + w};
        const double norm = integrate_with_breakpoints(p0, pts, tight).value;
        const double mean = integrate_with_breakpoints(p1, pts, tight).value / norm;
        const double rel =
            std::abs(mean - mean_position(cfg, t)) / (std::abs(mean) + s0);
        r.add(name, rel < 1e-8,
              "grid centroid vs closed form rel diff = " + detail::fmt(rel));
    });

    if (!rc.quick) {
        rep.run("oracle_l2", [&](R& r, const std::string& name) {
            const GaussianPacketSpec spec{s0, 10 * s0, 1.0 / s0};
            const Scenario fall = Scenario::free_fall(rc.g);
            const GridState init =
                make_initial_state(spec, m_n, fall, t_ref);
            const GridState evolved = propagate(init, m_n, fall, t_ref, 1500);
            const double l2 = l2_distance(evolved, [&](double z) {
                return cplx(evolve(spec, m_n, fall, t_ref, z));
            });
            r.add(name, l2 < 1e-6, "L2 vs closed form = " + detail::fmt(l2));
        });

        rep.run("golden_free_table", [&](R& r, const std::string& name) {
            const QuadraturePolicy policy = detail::resolve_policy(rc, {});
            const Scenario freeev = Scenario::free_evolution();
            double worst = 0.0;
            const double expect[3] = {2.3713, 2.5455, 2.4263};
            const StatisticsKind ks[3] = {StatisticsKind::BE,
                                          StatisticsKind::FD,
                                          StatisticsKind::MB};
            for (int i = 0; i < 3; ++i) {
                const TwoBodyConfig cfg =
                    detail::make_pair_config(rc, 10.0, ks[i], freeev);
                const double tau =
                    mean_arrival_time(cfg, 0.0, policy) / t_ref;
                worst = std::max(worst, std::abs(tau - expect[i]));
            }
            r.add(name, worst < 2e-3,
                  "max |tau - pinned| = " + detail::fmt(worst) +
                      " (free, z_ca=10 sigma0)");
        });

        rep.run("golden_fall_table", [&](R& r, const std::string& name) {
            const QuadraturePolicy policy = detail::resolve_policy(rc, {});
            const Scenario fall = Scenario::free_fall(rc.g);
            double worst = 0.0;
            const double expect[3] = {1.33865, 1.34001, 1.33908};
            const StatisticsKind ks[3] = {StatisticsKind::BE,
                                          StatisticsKind::FD,
                                          StatisticsKind::MB};
            for (int i = 0; i < 3; ++i) {
                const TwoBodyConfig cfg =
                    detail::make_pair_config(rc, 10.0, ks[i], fall);
                const double tau =
                    mean_arrival_time(cfg, 0.0, policy) / t_ref;
                worst = std::max(worst, std::abs(tau - expect[i]));
            }
            r.add(name, worst < 1e-3,
                  "max |tau - pinned| = " + detail::fmt(worst) +
                      " (fall, z_ca=10 sigma0)");
        });
    }

    return rep.finish(os);
}

// --- entry point ------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
    RunConfig rc;
    CLI::App app{"Arrival-time distributions and mean arrival times for pairs "
                 "of identical Gaussian packets (MB/BE/FD statistics), plus "
                 "the spin-dependent single-particle variant."};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file");
    app.add_option("--out", rc.out, "output file path");
    app.add_option("--sigma0_um", rc.sigma0_um, "packet width sigma0 [um]")
        ->check(CLI::PositiveNumber);
    app.add_option("--z_ca", rc.z_ca, "packet a center [sigma0]");
    app.add_option("--z_cb", rc.z_cb, "packet b center [sigma0]");
    app.add_option("--separation", rc.separation,
                   "z_ca - z_cb [sigma0]; overrides --z_ca");
    app.add_option("--k_a", rc.k_a,
                   "packet a kick [1/sigma0] (default: -2 free, 0 fall)");
    app.add_option("--k_b", rc.k_b,
                   "packet b kick [1/sigma0] (default: -2 free, 0 fall)");
    app.add_option("--mass", rc.mass, "particle mass [m_n]")
        ->check(CLI::PositiveNumber);
    app.add_option("--g", rc.g, "gravitational acceleration [m/s^2]")
        ->check(CLI::PositiveNumber);
    app.add_option("--scenario", rc.scenario,
                   "free | fall | both (default depends on subcommand)");
    app.add_option("--statistics", rc.statistics,
                   "be | fd | mb | all (echoed in the header; all columns "
                   "are always computed)");
    app.add_option("--detector_z", rc.detector_z, "detector position [sigma0]");
    app.add_option("--z_ca_list", rc.z_ca_list,
                   "comma-separated z_ca values [sigma0]");
    app.add_option("--mass_min", rc.mass_min, "sweep lower bound [m_n]");
    app.add_option("--mass_max", rc.mass_max, "sweep upper bound [m_n]");
    app.add_option("--mass_points", rc.mass_points, "log-spaced sweep points");
    app.add_option("--spin_z_c", rc.spin_z_c, "spin packet center [sigma0]");
    app.add_option("--spin_k0", rc.spin_k0, "spin packet kick [1/sigma0]");
    app.add_option("--spin_mass_list", rc.spin_mass_list,
                   "comma-separated masses [m_n]");
    app.add_option("--format", rc.format, "csv | tsv");
    app.add_option("--abs_tol", rc.abs_tol, "quadrature absolute tolerance");
    app.add_option("--rel_tol", rc.rel_tol, "quadrature relative tolerance");
    app.add_option("--max_subdivisions", rc.max_subdivisions,
                   "quadrature subdivision limit");
    app.add_option("--initial_cutoff_factor", rc.initial_cutoff_factor,
                   "first time window / crossing estimate");
    app.add_option("--tail_fraction", rc.tail_fraction,
                   "cutoff extension stop rule");
    app.add_option("--cutoff_cap_factor", rc.cutoff_cap_factor,
                   "hard cutoff cap [t_ref(mass)]");

    CLI::App* sub_dist =
        app.add_subcommand("arrival-dist", "arrival-time distribution files");
    CLI::App* sub_tables =
        app.add_subcommand("tables", "overlap and mean-arrival-time tables");
    CLI::App* sub_mass =
        app.add_subcommand("mass-sweep", "mean arrival times versus mass");
    CLI::App* sub_spin = app.add_subcommand(
        "spin-sweep", "spin-dependent vs conventional arrival versus mass");
    CLI::App* sub_verify =
        app.add_subcommand("verify", "run the invariant suite");
    sub_verify->add_flag("--quick", rc.quick,
                         "closed-form checks only (< 5 s)");
    for (CLI::App* sub :
         {sub_dist, sub_tables, sub_mass, sub_spin, sub_verify})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sub_dist->parsed()) return cmd_arrival_dist(rc);
        if (sub_tables->parsed()) return cmd_tables(rc);
        if (sub_mass->parsed()) return cmd_mass_sweep(rc);
        if (sub_spin->parsed()) return cmd_spin_sweep(rc);
        if (sub_verify->parsed()) {
            std::ostringstream report;
            const int code = cmd_verify(rc, report);
            std::cout << report.str();
            if (!rc.out.empty()) {
                std::ofstream copy(rc.out, std::ios::binary);
                if (!copy)
                    throw validation_error("cannot open output file '" +
                                           rc.out + "'");
                copy << report.str();
            }
            return code;
        }
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const weq::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace weq::cli
