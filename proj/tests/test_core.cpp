// Constants, parameter validation and the error taxonomy.

#include <catch2/catch_amalgamated.hpp>

#include <weq/core.hpp>

using namespace weq;

TEST_CASE("physical constants have the values everything else assumes") {
    const PhysicalConstants& c = constants();
    CHECK(c.hbar == 1.054571817e-34);
    CHECK(c.default_g == 10.0);
    CHECK(c.neutron_mass == 1.67e-27);
    CHECK(hbar == c.hbar);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("reference time: 2 m sigma0^2 / hbar") {
    const double t_ref = reference_time(1.67e-27, 10e-6);
    // 2 * 1.67e-27 * 1e-10 / 1.054571817e-34
    CHECK_THAT(t_ref, Catch::Matchers::WithinRel(3.167162204e-3, 1e-9));
    // quoted rounded value is 3.165 ms; the difference is the rounding of the
    // inputs, well inside 0.2%
    CHECK(std::abs(t_ref - 3.165e-3) / 3.165e-3 < 2e-3);

    CHECK_THROWS_AS(reference_time(0.0, 10e-6), validation_error);
    CHECK_THROWS_AS(reference_time(1e-27, -1.0), validation_error);
}

TEST_CASE("characteristic mass: hbar / sqrt(g sigma0^3)") {
    const double m0 = characteristic_mass(10.0, 10e-6);
    CHECK_THAT(m0, Catch::Matchers::WithinRel(1.054571817e-27, 1e-9));
    CHECK(std::abs(m0 - 1.055e-27) / 1.055e-27 < 2e-3);

    CHECK_THROWS_AS(characteristic_mass(0.0, 10e-6), validation_error);
    CHECK_THROWS_AS(characteristic_mass(10.0, 0.0), validation_error);
}

TEST_CASE("exchange sign: BE +1, FD -1, MB 0") {
    CHECK(exchange_sign(StatisticsKind::BE) == 1.0);
    CHECK(exchange_sign(StatisticsKind::FD) == -1.0);
    CHECK(exchange_sign(StatisticsKind::MB) == 0.0);
    CHECK(statistics_name(StatisticsKind::BE) == std::string("BE"));
    CHECK(statistics_name(StatisticsKind::FD) == std::string("FD"));
    CHECK(statistics_name(StatisticsKind::MB) == std::string("MB"));
}

TEST_CASE("scenario factories and the acceleration that enters closed forms") {
    const Scenario free = Scenario::free_evolution();
    CHECK_FALSE(free.falling());
    CHECK(free.accel() == 0.0);
    CHECK_NOTHROW(free.validate());

    const Scenario fall = Scenario::free_fall(10.0);
    CHECK(fall.falling());
    CHECK(fall.accel() == 10.0);
    CHECK_NOTHROW(fall.validate());

    CHECK_THROWS_AS(Scenario::free_fall(0.0).validate(), validation_error);
    CHECK_THROWS_AS(Scenario::free_fall(-9.8).validate(), validation_error);
}

TEST_CASE("packet and pair validation") {
    GaussianPacketSpec p;
    CHECK_NOTHROW(p.validate());
    p.sigma0 = 0.0;
    CHECK_THROWS_AS(p.validate(), validation_error);
    p.sigma0 = 10e-6;
    p.z_c = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(p.validate(), validation_error);

    TwoBodyConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.mass = -1.0;
    CHECK_THROWS_AS(cfg.validate(), validation_error);
}

TEST_CASE("error taxonomy nests as documented") {
    // validation family (exit 1)
    CHECK_THROWS_AS(throw unsupported_config_error("x"), validation_error);
    CHECK_THROWS_AS(throw degenerate_state_error("x"), validation_error);
    CHECK_THROWS_AS(throw validation_error("x"), error);
    // numerical family (exit 2)
    CHECK_THROWS_AS(throw convergence_error("x", 1.0, 0.5), numerical_error);
    CHECK_THROWS_AS(throw no_arrival_error("x"), numerical_error);
    CHECK_THROWS_AS(throw no_crossing_error("x"), numerical_error);
    CHECK_THROWS_AS(throw step_size_error("x"), numerical_error);
    CHECK_THROWS_AS(throw coverage_error("x"), numerical_error);
    CHECK_THROWS_AS(throw numerical_error("x"), error);
    // and everything is a weq::error with its message intact
    try {
        throw convergence_error("ran out of subdivisions", 1.25, 0.03);
    } catch (const convergence_error& e) {
        CHECK(std::string(e.what()) == "ran out of subdivisions");
        CHECK(e.best_estimate == 1.25);
        CHECK(e.error_estimate == 0.03);
    }
}
