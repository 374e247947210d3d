#pragma once

// Shared physical constants, parameter types and the error taxonomy used by
// every other header. All internal computation is in SI units; callers divide
// by reference_time / sigma0 / neutron_mass for dimensionless output.

#include <cmath>
#include <stdexcept>
#include <string>

namespace weq {

// ---------------------------------------------------------------------------
// Errors.
//
// validation family  -> caller passed something out of domain (CLI exit 1)
// numerical family   -> the computation itself could not meet its contract
//                       (CLI exit 2)

class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

class validation_error : public error {
public:
    explicit validation_error(const std::string& msg) : error(msg) {}
};

// Parameter combination outside the domain of a closed form (e.g. the spread
// formula requires free fall with equal widths and zero kicks).
class unsupported_config_error : public validation_error {
public:
    explicit unsupported_config_error(const std::string& msg)
        : validation_error(msg) {}
};

// Antisymmetrizing two identical packets annihilates the state (Pauli).
class degenerate_state_error : public validation_error {
public:
    explicit degenerate_state_error(const std::string& msg)
        : validation_error(msg) {}
};

class numerical_error : public error {
public:
    explicit numerical_error(const std::string& msg) : error(msg) {}
};

// Adaptive quadrature ran out of subdivisions; carries its best estimate.
class convergence_error : public numerical_error {
public:
    convergence_error(const std::string& msg, double best, double err)
        : numerical_error(msg), best_estimate(best), error_estimate(err) {}
    double best_estimate;
    double error_estimate;
};

// |j1| integrated over the whole window is negligible: the packet never
// meaningfully crosses the detector.
class no_arrival_error : public numerical_error {
public:
    explicit no_arrival_error(const std::string& msg) : numerical_error(msg) {}
};

// Radicand of the center-crossing closed form went negative.
class no_crossing_error : public numerical_error {
public:
    explicit no_crossing_error(const std::string& msg) : numerical_error(msg) {}
};

// Grid propagator lost unitarity beyond tolerance.
class step_size_error : public numerical_error {
public:
    explicit step_size_error(const std::string& msg) : numerical_error(msg) {}
};

// Moment grid does not cover enough of the density bulk.
class coverage_error : public numerical_error {
public:
    explicit coverage_error(const std::string& msg) : numerical_error(msg) {}
};

// ---------------------------------------------------------------------------
// Constants and parameter types.

struct PhysicalConstants {
    double hbar = 1.054571817e-34;  // J s (CODATA)
    double default_g = 10.0;        // m/s^2, the rounded value used throughout
    double neutron_mass = 1.67e-27; // kg

    void validate() const {
        if (!(hbar > 0.0) || !(default_g > 0.0) || !(neutron_mass > 0.0))
            throw validation_error("PhysicalConstants: all fields must be positive");
    }
};

inline const PhysicalConstants& constants() {
    static const PhysicalConstants c{};
    return c;
}

inline constexpr double hbar = 1.054571817e-34;

// Echoed into every output header so golden files can pin the producer.
inline constexpr const char* version_string = "1.0.0";

// One packet's initial data: psi(z,0) ~ exp(-(z-z_c)^2/4 sigma0^2 + i k z).
struct GaussianPacketSpec {
    double sigma0 = 10e-6; // rms width, m
    double z_c = 0.0;      // initial center, m
    double k = 0.0;        // kick momentum, 1/m

    void validate() const {
        if (!(sigma0 > 0.0))
            throw validation_error("GaussianPacketSpec: sigma0 must be > 0");
        if (!std::isfinite(z_c) || !std::isfinite(k))
            throw validation_error("GaussianPacketSpec: z_c and k must be finite");
    }
};

enum class ScenarioKind { FreeEvolution, FreeFall };

struct Scenario {
    ScenarioKind kind = ScenarioKind::FreeEvolution;
    double g = 10.0; // m/s^2, used only for FreeFall

    static Scenario free_evolution() { return {ScenarioKind::FreeEvolution, 0.0}; }
    static Scenario free_fall(double g) { return {ScenarioKind::FreeFall, g}; }

    bool falling() const { return kind == ScenarioKind::FreeFall; }
    // Acceleration actually entering the closed forms: 0 for free evolution.
    double accel() const { return falling() ? g : 0.0; }

    void validate() const {
        if (falling() && !(g > 0.0))
            throw validation_error("Scenario: g must be > 0 for FreeFall");
    }
};

// BE takes the upper sign, FD the lower sign in every +- formula; MB is the
// unsymmetrized (distinguishable) mixture.
enum class StatisticsKind { MB, BE, FD };

inline double exchange_sign(StatisticsKind s) {
    switch (s) {
        case StatisticsKind::BE: return +1.0;
        case StatisticsKind::FD: return -1.0;
        default: return 0.0;
    }
}

inline const char* statistics_name(StatisticsKind s) {
    switch (s) {
        case StatisticsKind::BE: return "BE";
        case StatisticsKind::FD: return "FD";
        default: return "MB";
    }
}

struct TwoBodyConfig {
    GaussianPacketSpec packet_a{};
    GaussianPacketSpec packet_b{};
    StatisticsKind statistics = StatisticsKind::MB;
    Scenario scenario = Scenario::free_evolution();
    double mass = 1.67e-27; // kg

    void validate() const {
        packet_a.validate();
        packet_b.validate();
        scenario.validate();
        if (!(mass > 0.0))
            throw validation_error("TwoBodyConfig: mass must be > 0");
    }
};

// ---------------------------------------------------------------------------
// Characteristic scales.

// t_ref = 2 m sigma0^2 / hbar, the packet-spreading time used to
// nondimensionalize every reported time.
inline double reference_time(double mass, double sigma0) {
    if (!(mass > 0.0) || !(sigma0 > 0.0))
        throw validation_error("reference_time: mass and sigma0 must be > 0");
    return 2.0 * mass * sigma0 * sigma0 / hbar;
}

// m0 = hbar / sqrt(g sigma0^3), the mass scale below which gravity competes
// with spreading.
inline double characteristic_mass(double g, double sigma0) {
    if (!(g > 0.0) || !(sigma0 > 0.0))
        throw validation_error("characteristic_mass: g and sigma0 must be > 0");
    return hbar / std::sqrt(g * sigma0 * sigma0 * sigma0);
}

} // namespace weq
