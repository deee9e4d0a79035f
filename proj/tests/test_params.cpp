#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "vkerr/config.hpp"
#include "vkerr/params.hpp"

using namespace vkerr;
using Catch::Approx;

TEST_CASE("normalize: shift cancels the detuning") {
    PhysicalParams p;
    p.gamma = 1.0;
    p.g = 1.0;
    p.E0 = 2.0;
    p.omega_0 = 0.0;
    p.omega_c = p.eta * p.g * (1.0 + 0.5 * p.A_mt);
    ModelParams m = normalize(p);
    CHECK(m.delta == Approx(0.0).margin(1e-15));
    CHECK(m.E == Approx(2.0));
}

TEST_CASE("normalize: pump amplitude scaling") {
    PhysicalParams p;
    p.gamma = 2.0;
    p.g = 0.5;
    p.E0 = 4.0;
    p.omega_c = p.eta * p.g * (1.0 + 0.5 * p.A_mt);
    CHECK(normalize(p).E == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("normalize: liquid shift 1.125") {
    PhysicalParams p;
    p.omega_c = 1.125;
    CHECK(normalize(p).delta == Approx(0.0).margin(1e-15));
}

TEST_CASE("normalize rejects non-positive rates") {
    PhysicalParams p;
    p.gamma = 0.0;
    CHECK_THROWS_AS(normalize(p), InvalidParameter);
    p.gamma = 1.0;
    p.g = -1.0;
    CHECK_THROWS_AS(normalize(p), InvalidParameter);
}

TEST_CASE("isotropic flag enforces A + B/2 = 1") {
    PhysicalParams p;
    p.isotropic = true;
    CHECK_NOTHROW(p.validate());
    p.A_mt = 0.5;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p.B_mt = 1.0;
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("denormalize: identity and scaled units") {
    ModelParams m = ModelParams::liquid(0.7, 1.0);
    CHECK(denormalize(m, 1.0, 1.0).E0 == Approx(1.0));
    CHECK(denormalize(m, 4.0, 1.0).E0 == Approx(8.0));
    CHECK_THROWS_AS(denormalize(m, 0.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(denormalize(m, 1.0, -2.0), InvalidParameter);
}

TEST_CASE("normalize inverts denormalize on random parameters") {
    oracle::Sampler rs(7);
    for (int k = 0; k < 200; ++k) {
        ModelParams m;
        m.delta = rs.uniform(-20, 20);
        m.eta = rs.uniform(0, 1) < 0.5 ? 1 : -1;
        m.A_mt = rs.uniform(-1, 2);
        m.B_mt = rs.uniform(-1, 3);
        m.E = rs.uniform(0, 5);
        ModelParams r = normalize(denormalize(m, rs.uniform(0.1, 10), rs.uniform(0.1, 10)));
        CHECK(r.delta == Approx(m.delta).margin(1e-12));
        CHECK(r.E == Approx(m.E).margin(1e-12));
        CHECK(r.eta == m.eta);
        CHECK(r.A_mt == m.A_mt);
        CHECK(r.B_mt == m.B_mt);
    }
}

TEST_CASE("mirror flips the nonlinearity sign and the physical detuning") {
    ModelParams m = ModelParams::liquid(2.0, 1.5);
    ModelParams r = mirror(m);
    CHECK(r.eta == -1);
    CHECK(r.cavity_detuning() == -m.cavity_detuning());
    CHECK(r.E == m.E);
    CHECK(mirror(ModelParams::liquid(0.0)).eta == -1);
    CHECK(mirror(mirror(m)) == m);
}

TEST_CASE("config: defaults, keys and errors") {
    Config c = config_from_json(nlohmann::json{{"delta", 2.0}, {"pump_E2", 3.0}});
    CHECK(c.model.delta == 2.0);
    CHECK(c.pump_E2 == 3.0);
    CHECK(c.model.A_mt == liquid_A);
    CHECK(c.model.B_mt == liquid_B);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"delta", 1.0}, {"bogus", 1}}), InvalidParameter);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"eta", 2}}), InvalidParameter);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"pump_E2", -1.0}}), InvalidParameter);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"delta", "x"}}), InvalidParameter);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"delta", 1.0}, {"physical", {{"gamma", 1.0}}}}),
                    InvalidParameter);
}

TEST_CASE("config: physical block goes through normalize") {
    Config c = config_from_json(
        nlohmann::json{{"physical", {{"gamma", 2.0}, {"g", 0.5}, {"E0", 4.0}, {"omega_c", 0.5625}}}});
    REQUIRE(c.physical);
    CHECK(c.model.E == Approx(1.0));
    CHECK(c.model.delta == Approx(0.0).margin(1e-15));
    Config back = config_from_json(config_to_json(c));
    CHECK(back.model.E == Approx(c.model.E));
}
