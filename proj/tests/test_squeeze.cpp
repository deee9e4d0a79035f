#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "support/oracles.hpp"
#include "vkerr/squeeze.hpp"

using namespace vkerr;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<std::pair<SteadyState, ModelParams>> random_stable_points(std::uint64_t seed, int want) {
    oracle::Sampler rs(seed);
    std::vector<std::pair<SteadyState, ModelParams>> out;
    while (int(out.size()) < want) {
        const double D = rs.uniform(-2, 4), E2 = rs.uniform(0.1, 6);
        ModelParams m = ModelParams::liquid(D, E2);
        for (const auto& s : steady_states(E2, m))
            if (s.stable == Stability::Stable && int(out.size()) < want) out.emplace_back(s, m);
    }
    return out;
}

}  // namespace

TEST_CASE("vacuum is at shot noise") {
    ModelParams m = ModelParams::liquid(0.4);
    SteadyState vac = singlemode_state(0.0, m, 0.0);
    for (int j : {1, 2})
        for (double b : {0.0, 0.7, 2.0})
            for (double w : {0.0, 1.0, 4.0}) {
                auto r = quad_spectrum(vac, m, j, b, w);
                CHECK(r.normal_ordered == 0.0);
                CHECK(r.symmetric == 1.0);
                CHECK(cross_spectrum(vac, m, CrossOrder::c12, b, 0.3, w).normal_ordered == cd{});
            }
    auto o = optimal_quadrature(vac, m, 2, 0.0);
    CHECK(o.q_min == 0.0);
}

TEST_CASE("unit-intensity point: closed-form values") {
    ModelParams m = ModelParams::liquid(1.0, 1.0);
    SteadyState s = singlemode_state(1.0, m, 1.0);
    CHECK(quad_spectrum(s, m, 1, 0.0, 0.0).normal_ordered == Approx(0.0).margin(1e-12));
    auto r = quad_spectrum(s, m, 2, 0.0, 0.0);
    CHECK(r.normal_ordered == Approx(9.0).epsilon(1e-12));
    CHECK(r.symmetric == Approx(10.0).epsilon(1e-12));
    CHECK(r.spec.mode == 2);
}

TEST_CASE("quadrature spectra: reference route, symmetry and bounds") {
    for (const auto& [s, m] : random_stable_points(61, 30)) {
        Linearization lin(s, m);
        for (int j : {1, 2})
            for (double b : {-1.0, 0.0, 0.9, 2.5})
                for (double w : {0.0, 0.6, 2.0}) {
                    const double q = quad_spectrum(lin, j, b, w).normal_ordered;
                    const cd ref = oracle::quadrature_from_entries(
                        oracle::spectral_via_covariance(lin.jacobian(), lin.diffusion(), w), j, b);
                    CHECK(std::abs(q - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
                    CHECK(q >= -1.0 - 1e-9);
                    CHECK(quad_spectrum(lin, j, b, -w).normal_ordered == Approx(q).epsilon(1e-10).margin(1e-12));
                    CHECK(quad_spectrum(lin, j, b + pi, w).normal_ordered ==
                          Approx(q).epsilon(1e-12).margin(1e-13));
                }
    }
}

TEST_CASE("cross spectra vanish on the singlemode branch") {
    for (const auto& [s, m] : random_stable_points(71, 30)) {
        if (s.I2 != 0.0) continue;
        for (double w : {0.0, 1.1})
            for (auto o : {CrossOrder::c12, CrossOrder::c21})
                CHECK(std::abs(cross_spectrum(s, m, o, 0.3, -1.2, w).normal_ordered) == 0.0);
    }
}

TEST_CASE("cross spectra of a bimode state are finite and nonzero") {
    ModelParams m = ModelParams::liquid(1.0, 3.0);
    auto b = bimode_states(3.0, m);
    REQUIRE(!b.empty());
    Linearization lin(b[0], m);
    for (double w : {0.0, 0.5, 2.0}) {
        cd c = cross_spectrum(lin, CrossOrder::c12, b[0].phi1, b[0].phi2, w).normal_ordered;
        CHECK(std::isfinite(c.real()));
        CHECK(std::isfinite(c.imag()));
        CHECK(std::abs(c) > 1e-6);
        const ComplexMatrix4 M = lin.spectral_matrix(w);
        Vec4c u = quadrature_vector(1, b[0].phi1), v = quadrature_vector(2, b[0].phi2);
        CHECK(std::abs(c - 2.0 * (u.transpose() * M * v)(0, 0)) < 1e-10 * std::max(1.0, M.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("closed-form denominators vanish at the bifurcations") {
    for (int k = 0; k < 50; ++k) {
        const double D = -5.0 + 0.2 * k;
        auto p = polarization_threshold(ModelParams::liquid(D));
        CHECK(std::abs(closed::Q2d(p.I_pol, D)) < 1e-10 * std::max(1.0, D * D));
        const double Dt = std::sqrt(3.0) + 0.05 * (k + 1);
        auto r = bistability_range(ModelParams::liquid(Dt));
        REQUIRE(r);
        CHECK(std::abs(closed::Q1d(r->I_minus, Dt)) < 1e-10 * Dt * Dt);
        CHECK(std::abs(closed::Q1d(r->I_plus, Dt)) < 1e-10 * Dt * Dt);
    }
}

TEST_CASE("closed form at the cusp") {
    ModelParams m = ModelParams::liquid(std::sqrt(3.0));
    CHECK(analytic_bifurcation_q(2.0 / std::sqrt(3.0), m, 2, pi, 1.0 / std::sqrt(3.0)) ==
          Approx(-0.75).margin(1e-9));
    auto p = polarization_threshold(ModelParams::liquid(1.0));
    CHECK_THROWS_AS(analytic_bifurcation_q(p.I_pol, ModelParams::liquid(1.0), 2, 0.0, 0.0), LimitRequired);
    CHECK_THROWS_AS(analytic_bifurcation_q(1.0, m, 3, 0.0, 0.0), InvalidParameter);
}

TEST_CASE("pipeline matches the closed forms on singlemode states") {
    oracle::Sampler rs(13);
    for (int k = 0; k < 60; ++k) {
        const double D = rs.uniform(-3, 3);
        const auto p = polarization_threshold(ModelParams::liquid(D));
        const double I = rs.uniform(0.05, 0.95) * p.I_pol;
        const ModelParams m = ModelParams::liquid(D, singlemode_pump(I, D));
        SteadyState s = singlemode_state(m.E2(), m, I);
        if (s.stable != Stability::Stable) continue;
        for (int field : {1, 2})
            for (double psi : {-2.0, 0.0, 1.0, pi})
                for (double w : {0.0, 0.3, 1.0, 3.0}) {
                    const double a = analytic_bifurcation_q(I, m, field, psi, w);
                    const double q = quad_spectrum(s, m, field, beta_from_psi(psi, s.phi1, m.eta), w).normal_ordered;
                    CHECK(std::abs(q - a) <= 1e-9 * std::max(1.0, std::abs(a)));
                }
    }
}

TEST_CASE("psi and beta mapping round trip") {
    for (int eta : {1, -1})
        for (double psi : {-3.0, -1.0, 0.0, 0.5, 3.0}) {
            const double b = beta_from_psi(psi, 0.4, eta);
            CHECK(wrap_angle(psi_from_beta(b, 0.4, eta) - psi) == Approx(0.0).margin(1e-14));
        }
}

TEST_CASE("optimal quadrature at the polarization bifurcation, zero detuning") {
    ModelParams m = ModelParams::liquid(0.0);
    SteadyState s = bifurcation_state(m, BifurcationKind::Polarization, 1e-8);
    const double E2 = polarization_threshold(m).E2_pol * (1.0 - 1e-8);
    auto o = optimal_quadrature(s, m.at_pump(E2), 2, 0.0);
    CHECK(o.psi == Approx(-std::acos(1.0 / 3.0)).margin(1e-6));
    CHECK(std::remainder(o.beta - s.phi1, pi) == Approx(-0.5 * std::acos(1.0 / 3.0)).margin(1e-6));
    CHECK(o.q_min == Approx(-1.0).margin(1e-6));
    CHECK(o.beta >= 0.0);
    CHECK(o.beta < pi);
}

TEST_CASE("optimal quadrature at the upper tangent bifurcation") {
    // The fold responds as the square root of the pump offset, so the offset is
    // kept small enough for I to sit within 1e-4 of the fold intensity.
    ModelParams m = ModelParams::liquid(2.0);
    SteadyState s = bifurcation_state(m, BifurcationKind::Up, 1e-9);
    const auto r = *bistability_range(m);
    auto o = optimal_quadrature(s, m.at_pump(r.up_fold().E2 * (1.0 + 1e-9)), 1, 0.0);
    CHECK(o.psi == Approx(closed::psi_up_opt(2.0)).margin(1e-3));
    CHECK(closed::psi_up_opt(2.0) == Approx(-std::acos(0.8)).epsilon(1e-14));
}

// The closed-form optimal frequencies hold at the bifurcation itself; there the
// point is singular only at omega = 0, which the optimizer steps around.
TEST_CASE("optimal frequencies") {
    {
        ModelParams m = ModelParams::liquid(0.0);
        const double E2 = polarization_threshold(m).E2_pol;
        SteadyState s = bifurcation_state(m, BifurcationKind::Polarization, 0.0);
        auto f = optimal_frequency(s, m.at_pump(E2), 1, s.phi1);
        CHECK(f.omega == Approx(std::sqrt(5.0)).margin(1e-3));
        CHECK(closed::omega_opt_pol(0.0) == Approx(std::sqrt(5.0)).epsilon(1e-14));
    }
    ModelParams m = ModelParams::liquid(2.0);
    const auto r = *bistability_range(m);
    {
        SteadyState s = bifurcation_state(m, BifurcationKind::Down, 0.0);
        auto f = optimal_frequency(s, m.at_pump(r.down_fold().E2), 2, s.phi1 + 0.5 * pi);
        CHECK(f.omega == Approx(std::sqrt(1.5)).margin(1e-3));
        CHECK(f.q_min == Approx(-0.6).margin(1e-9));
        CHECK(closed::omega_opt_lower(2.0) == Approx(std::sqrt(1.5)).epsilon(1e-14));
    }
    {
        SteadyState s = bifurcation_state(m, BifurcationKind::Up, 0.0);
        auto f = optimal_frequency(s, m.at_pump(r.up_fold().E2), 2, s.phi1 + 0.5 * pi);
        CHECK(f.omega == Approx(0.0).margin(1e-3));
    }
    {
        SteadyState s = bifurcation_state(m, BifurcationKind::Down, 1e-6);
        auto f = optimal_frequency(s, m.at_pump(r.down_fold().E2 * (1 - 1e-6)), 2, s.phi1 + 0.5 * pi);
        CHECK(f.omega == Approx(std::sqrt(1.5)).margin(5e-3));
    }
}

TEST_CASE("perfect squeezing is approached monotonically") {
    const ModelParams m = ModelParams::liquid(2.0);
    for (auto [kind, field] : {std::pair{BifurcationKind::Polarization, 2}, std::pair{BifurcationKind::Up, 1},
                               std::pair{BifurcationKind::Down, 1}}) {
        const auto bp = bifurcation_point(m, kind);
        double prev = 1.0;
        for (double eps : {1e-3, 1e-4, 1e-5, 1e-6}) {
            const double E2 = kind == BifurcationKind::Up ? bp.E2 * (1 + eps) : bp.E2 * (1 - eps);
            SteadyState s = bifurcation_state(m, kind, eps);
            const double q = optimal_quadrature(s, m.at_pump(E2), field, 0.0).q_min;
            CHECK(q < prev);
            prev = q;
        }
        CHECK(prev <= -0.999);
    }
}

TEST_CASE("narrow squeezing window at the polarization bifurcation") {
    for (double D : {0.0, 2.0})
        for (double eps : {1e-3, 1e-6}) {
            ModelParams m = ModelParams::liquid(D);
            const double E2 = polarization_threshold(m).E2_pol * (1.0 - eps);
            SteadyState s = bifurcation_state(m, BifurcationKind::Polarization, eps);
            Linearization lin(s, m.at_pump(E2));
            auto q = [&](double psi) {
                return quad_spectrum(lin, 2, beta_from_psi(psi, s.phi1, m.eta), 0.0).normal_ordered;
            };
            const double centre = optimal_quadrature(lin, s, 2, 0.0).psi;
            REQUIRE(q(centre) < 0.0);
            auto edge = [&](double dir) {
                double in = 0.0, out = 0.5 * pi;
                REQUIRE(q(centre + dir * out) > 0.0);
                for (int it = 0; it < 200; ++it) {
                    double mid = 0.5 * (in + out);
                    (q(centre + dir * mid) < 0.0 ? in : out) = mid;
                }
                return in;
            };
            const double width = edge(1.0) + edge(-1.0);
            CHECK(width > 0.0);
            CHECK(width < pi / 6);
        }
}

TEST_CASE("exactly at a bifurcation the zero-frequency spectrum is refused") {
    ModelParams m = ModelParams::liquid(1.0);
    SteadyState s = bifurcation_state(m, BifurcationKind::Polarization, 0.0);
    const double E2 = polarization_threshold(m).E2_pol;
    CHECK_THROWS_AS(quad_spectrum(s, m.at_pump(E2), 2, 0.0, 0.0), NearSingular);
    CHECK_NOTHROW(quad_spectrum(s, m.at_pump(E2), 2, 0.0, 1e-4));
    CHECK_THROWS_AS(bifurcation_state(ModelParams::liquid(1.0), BifurcationKind::Up, 1e-6), InvalidParameter);
}
