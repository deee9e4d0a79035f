#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "support/oracles.hpp"
#include "vkerr/stokes.hpp"

using namespace vkerr;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

SteadyState at_offset(const ModelParams& m, BifurcationKind kind, double eps, ModelParams& mp) {
    const auto bp = bifurcation_point(m, kind);
    mp = m.at_pump(kind == BifurcationKind::Up ? bp.E2 * (1 + eps) : bp.E2 * (1 - eps));
    return bifurcation_state(m, kind, eps);
}

}  // namespace

TEST_CASE("mean Stokes parameters") {
    SteadyState s;
    s.I1 = 1.0;
    auto a = stokes_means(s);
    CHECK(a.s0 == 1.0);
    CHECK(a.s1 == 1.0);
    CHECK(a.s2 == 0.0);
    CHECK(a.s3 == 0.0);

    SteadyState c;
    c.I1 = c.I2 = 1.0;
    c.phi1 = 0.3;
    c.phi2 = 0.3 + 0.5 * pi;
    auto b = stokes_means(c);
    CHECK(b.s0 == 2.0);
    CHECK(b.s1 == 0.0);
    CHECK(b.s2 == Approx(0.0).margin(1e-15));
    CHECK(b.s3 == Approx(2.0).epsilon(1e-15));
}

TEST_CASE("phase twins flip s2 and s3 and share variance spectra") {
    for (double E2 : {2.5, 3.0, 6.0}) {
        ModelParams m = ModelParams::liquid(1.0, E2);
        auto b = bimode_states(E2, m);
        REQUIRE(b.size() >= 2);
        const SteadyState *p = nullptr, *q = nullptr;
        for (const auto& s : b) (s.phase_partner ? q : p) = &s;
        REQUIRE(p);
        REQUIRE(q);
        auto mp = stokes_means(*p), mq = stokes_means(*q);
        CHECK(mq.s0 == mp.s0);
        CHECK(mq.s1 == mp.s1);
        CHECK(mq.s2 == Approx(-mp.s2).epsilon(1e-12));
        CHECK(mq.s3 == Approx(-mp.s3).epsilon(1e-12));
        CHECK(mp.s0 * mp.s0 >= mp.s1 * mp.s1 + mp.s2 * mp.s2 + mp.s3 * mp.s3 - 1e-9);
        for (double w : {0.0, 0.4, 2.0}) {
            auto vp = stokes_variance_spectra(*p, m, w), vq = stokes_variance_spectra(*q, m, w);
            for (int k = 0; k < 4; ++k) CHECK(vq.v_norm[k] == Approx(vp.v_norm[k]).epsilon(1e-9));
        }
    }
}

TEST_CASE("vacuum variances are coherent") {
    ModelParams m = ModelParams::liquid(1.0);
    SteadyState vac = singlemode_state(0.0, m, 0.0);
    auto v = stokes_variance_spectra(vac, m, 0.5);
    for (int k = 0; k < 4; ++k) CHECK(v.v_norm[k] == 1.0);
    StokesMeans coherent{1.0, 1.0, 0.0, 0.0};
    StokesVariances flat;
    CHECK_FALSE(classify_polarization(coherent, flat).squeezed_param);
}

TEST_CASE("singlemode reduction of the variance spectra") {
    oracle::Sampler rs(17);
    for (int k = 0; k < 40; ++k) {
        const double D = rs.uniform(-2, 3), E2 = rs.uniform(0.1, 1.8);
        ModelParams m = ModelParams::liquid(D, E2);
        for (const auto& s : singlemode_states(E2, m)) {
            if (s.stable != Stability::Stable) continue;
            Linearization lin(s, m);
            for (double w : {0.0, 0.5, 2.5}) {
                auto v = stokes_variance_spectra(lin, s, w);
                CHECK(std::abs(v.v_norm[0] - v.v_norm[1]) <= 1e-12 * std::max(1.0, std::abs(v.v_norm[0])));
                CHECK(v.v_norm[0] == Approx(1 + quad_spectrum(lin, 1, s.phi1, w).normal_ordered).epsilon(1e-12));
                CHECK(v.v_norm[2] == Approx(1 + quad_spectrum(lin, 2, s.phi1, w).normal_ordered).epsilon(1e-12));
                CHECK(v.v_norm[3] ==
                      Approx(1 + quad_spectrum(lin, 2, s.phi1 + 0.5 * pi, w).normal_ordered).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("closed-form Stokes variances match the pipeline") {
    oracle::Sampler rs(19);
    int checked = 0;
    while (checked < 200) {
        const double D = rs.uniform(-2, 1.7);
        const double I = rs.uniform(0.05, 0.95) * polarization_threshold(ModelParams::liquid(D)).I_pol;
        ModelParams m = ModelParams::liquid(D, singlemode_pump(I, D));
        SteadyState s = singlemode_state(m.E2(), m, I);
        if (s.stable != Stability::Stable) continue;
        for (double w : {0.0, 0.3, 1.0, 3.0}) {
            auto a = bifurcation_stokes(I, m, w);
            auto b = stokes_variance_spectra(s, m, w);
            for (int k = 0; k < 4; ++k)
                CHECK(std::abs(a.v_norm[k] - b.v_norm[k]) <= 1e-9 * std::max(1.0, std::abs(b.v_norm[k])));
            ++checked;
        }
    }
}

TEST_CASE("closed-form Stokes special values") {
    ModelParams m = ModelParams::liquid(0.8);
    CHECK(bifurcation_stokes(0.8, m, 0.7).v_norm[3] == 1.0);
    ModelParams m2 = ModelParams::liquid(2.0);
    CHECK(bifurcation_stokes(5.0 / 3.0, m2, 1e-4).v_norm[3] < 1.0);
    auto p = polarization_threshold(m2);
    CHECK_THROWS_AS(bifurcation_stokes(p.I_pol, m2, 0.0), LimitRequired);
}

TEST_CASE("S3 squeezing at the upper tangent bifurcation") {
    ModelParams mp;
    SteadyState s = at_offset(ModelParams::liquid(2.0), BifurcationKind::Up, 1e-6, mp);
    auto v = stokes_variance_spectra(s, mp, 1e-3);
    auto verdict = classify_polarization(stokes_means(s), v);
    REQUIRE(verdict.squeezed_param);
    CHECK(*verdict.squeezed_param == 3);
    bool has = false;
    for (const auto& w : verdict.witness) has = has || (w.l == 3 && w.m == 1 && w.k == 2);
    CHECK(has);
}

TEST_CASE("S3 squeezed at both tangent bifurcations over a detuning range") {
    for (int k = 0; k < 25; ++k) {
        const double D = std::sqrt(3.0) + 0.01 + (10.0 - std::sqrt(3.0) - 0.01) * k / 24.0;
        for (auto kind : {BifurcationKind::Up, BifurcationKind::Down}) {
            ModelParams mp;
            SteadyState s = at_offset(ModelParams::liquid(D), kind, 1e-6, mp);
            auto row = stokes_row(s, mp);
            CHECK(row.verdict.squeezed_param == std::optional<int>(3));
        }
    }
}

TEST_CASE("no polarization squeezing at the polarization bifurcation") {
    for (double D : {0.0, 1.0, 2.0}) {
        ModelParams mp;
        SteadyState s = at_offset(ModelParams::liquid(D), BifurcationKind::Polarization, 1e-6, mp);
        auto row = stokes_row(s, mp);
        CHECK_FALSE(row.verdict.squeezed_param);
        CHECK(row.verdict.witness.empty());
    }
}

TEST_CASE("bimode point at E2 = 3 squeezes S2") {
    ModelParams m = ModelParams::liquid(1.0, 3.1);
    auto states = stable_states(3.1, m);
    REQUIRE(!states.empty());
    auto row = stokes_row(states[0], m);
    CHECK(row.verdict.squeezed_param == std::optional<int>(2));
}

TEST_CASE("pump scan at detuning one") {
    std::vector<double> pumps;
    for (int k = 0; k < 30; ++k) pumps.push_back(0.5 + 7.5 * k / 29.0);
    auto rows = pump_scan(ModelParams::liquid(1.0), pumps);
    const double E2pol = polarization_threshold(ModelParams::liquid(1.0)).E2_pol;
    bool s1_high = false;
    for (const auto& r : rows) {
        REQUIRE_FALSE(r.flagged);
        if (r.E2 >= 2.1) CHECK(*std::min_element(r.min_v.begin(), r.min_v.end()) < 1.0);
        if (r.E2 < E2pol) {
            CHECK(r.state->I2 == 0.0);
            CHECK(r.min_v[0] == Approx(r.min_v[1]).epsilon(1e-12));
        }
        if (r.E2 > 5.0 && r.verdict.squeezed_param == std::optional<int>(1)) s1_high = true;
    }
    CHECK(s1_high);
    CHECK_THROWS_AS(pump_scan(ModelParams::liquid(1.0), {1.0, -1.0}), InvalidParameter);
}
