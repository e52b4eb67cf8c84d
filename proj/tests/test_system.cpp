#include <cmath>

#include "cavsim/system.hpp"
#include "cavsim/units.hpp"
#include "doctest.h"

using namespace cavsim;

TEST_SUITE("system") {

TEST_CASE("finesse fixes the cavity linewidth") {
    auto d = derive_cavity_from_finesse(74e-6, 85000.0);
    CHECK(d.fsr_hz == doctest::Approx(speed_of_light / 148e-6).epsilon(1e-12));
    CHECK(d.fwhm_hz == doctest::Approx(d.fsr_hz / 85000.0).epsilon(1e-12));
    // field half-width kappa/2pi = fwhm/2, lands at 11.9 MHz for this geometry
    CHECK(d.kappa / two_pi == doctest::Approx(11.915e6).epsilon(2e-4));
    CHECK(d.eta_out == 0.0);
}

TEST_CASE("mirror budget fixes finesse and outcoupling") {
    auto d = derive_cavity_from_mirrors(74e-6, 40.0, 1.0, 18.0);
    // round trip spends 40 + 1 + 2*18 = 77 ppm
    CHECK(d.finesse == doctest::Approx(two_pi / 77e-6).epsilon(1e-12));
    CHECK(d.eta_out == doctest::Approx(40.0 / 77.0).epsilon(1e-12));
    CHECK(d.kappa == doctest::Approx(pi * d.fwhm_hz).epsilon(1e-12));
    CHECK(d.kappa / two_pi == doctest::Approx(12.4e6).epsilon(5e-3));
}

TEST_CASE("lossless single-sided cavity outcouples everything") {
    auto d = derive_cavity_from_mirrors(74e-6, 40.0, 0.0, 0.0);
    CHECK(d.eta_out == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("parameter validation rejects nonphysical rates") {
    LambdaSystemParams p;
    p.g0 = mhz_2pi(12);
    p.kappa = mhz_2pi(12);
    p.gamma = mhz_2pi(3);
    CHECK_NOTHROW(p.validate());
    CHECK(p.strong_coupling());
    CHECK(p.resonant());

    auto bad = p;
    bad.kappa = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = p;
    bad.gamma = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(derive_cavity_from_finesse(0.0, 85000.0), ConfigError);
    CHECK_THROWS_AS(derive_cavity_from_mirrors(74e-6, 1.0, 40.0, 18.0), ConfigError);
}

}  // TEST_SUITE
