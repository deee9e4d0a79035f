#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vkerr/errors.hpp"
#include "vkerr/linfluct.hpp"
#include "vkerr/model.hpp"
#include "vkerr/parallel.hpp"
#include "vkerr/squeeze.hpp"
#include "vkerr/steady.hpp"

namespace vkerr {

struct NoiseFactor {
    ComplexMatrix4 b = ComplexMatrix4::Zero();
};

// Complex Cholesky-type factor with B B^T = D (plain transpose) on each of the
// independent 2x2 blocks {0,2} and {1,3}.
inline NoiseFactor noise_factor(const ComplexMatrix4& d) {
    constexpr double tiny = 1e-14;
    NoiseFactor nf;
    ComplexMatrix4& b = nf.b;
    for (auto [i, k] : {std::pair{0, 2}, std::pair{1, 3}}) {
        const cd dii = d(i, i), dkk = d(k, k), dik = d(i, k);
        if (std::abs(dii) >= tiny) {
            b(i, i) = std::sqrt(dii);
            b(k, i) = dik / b(i, i);
            b(k, k) = std::sqrt(dkk - b(k, i) * b(k, i));
        } else if (std::abs(dkk) >= tiny) {
            b(k, k) = std::sqrt(dkk);
            b(i, k) = dik / b(k, k);
            b(i, i) = std::sqrt(dii - b(i, k) * b(i, k));
        } else if (std::abs(dik) != 0.0) {
            throw DegenerateBlock("diffusion block has vanishing diagonal but nonzero coupling");
        }
    }
    return nf;
}

struct SimConfig {
    double dt = 1e-3;
    double duration = 200.0;
    int n_traj = 400;
    std::uint64_t seed = 42;
    double burn_in = 10.0;
    double sample_interval = 0.05;  // stored sample spacing, a multiple of dt
    int segments_per_record = 2;    // Welch segment = post-burn-in record / this
    unsigned threads = 0;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt must be positive");
        if (!(duration > burn_in) || !(burn_in >= 0.0)) throw InvalidParameter("need duration > burn_in >= 0");
        if (n_traj < 1) throw InvalidParameter("n_traj must be at least 1");
        if (!(sample_interval >= dt)) throw InvalidParameter("sample_interval must be at least dt");
        if (segments_per_record < 1) throw InvalidParameter("segments_per_record must be at least 1");
        (void)stride();
    }

    long stride() const {
        double r = sample_interval / dt;
        long k = std::lround(r);
        if (k < 1 || std::abs(r - double(k)) > 1e-9 * r) throw InvalidParameter("sample_interval must be a multiple of dt");
        return k;
    }
    long total_steps() const { return std::lround(duration / dt); }
    long burn_steps() const { return std::lround(burn_in / dt); }
    double sample_dt() const { return double(stride()) * dt; }
};

struct Trajectory {
    std::vector<Vec4c> samples;
    bool diverged = false;
};

struct Ensemble {
    double sample_dt = 0.0;
    std::vector<Trajectory> trajectories;
    double divergence_fraction = 0.0;
};

namespace detail {

inline std::mt19937_64 trajectory_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(index),
                      std::uint32_t(index >> 32)};
    return std::mt19937_64(seq);
}

// Euler-Maruyama for d(da) = A da dt + B dW, calling sink after burn-in.
template <class Sink>
void linearized_path(const ComplexMatrix4& A, const ComplexMatrix4& B, const SimConfig& cfg, std::uint64_t index,
                     Sink&& sink) {
    auto rng = trajectory_rng(cfg.seed, index);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sq = std::sqrt(cfg.dt);
    const long n = cfg.total_steps(), burn = cfg.burn_steps(), k = cfg.stride();
    Vec4c x = Vec4c::Zero();
    Eigen::Vector4d xi;
    for (long step = 1; step <= n; ++step) {
        for (int c = 0; c < 4; ++c) xi(c) = normal(rng);
        x += (A * x) * cfg.dt + B * (xi.cast<cd>() * sq);
        if (step > burn && (step - burn) % k == 0) {
            if (!x.allFinite()) {
                std::ostringstream os;
                os << "non-finite sample in trajectory " << index << " at t=" << step * cfg.dt;
                throw Divergence(os.str());
            }
            sink(x);
        }
    }
}

inline std::vector<double> hann(std::size_t L) {
    std::vector<double> w(L);
    for (std::size_t k = 0; k < L; ++k)
        w[k] = L > 1 ? 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(k) / double(L - 1))) : 1.0;
    return w;
}

struct Segmentation {
    std::size_t length = 0;
    std::size_t hop = 0;
    std::size_t count = 0;
};

inline Segmentation segmentation(std::size_t n_samples, int segments_per_record) {
    Segmentation s;
    s.length = n_samples / std::size_t(segments_per_record);
    if (s.length < 2) return s;
    s.hop = std::max<std::size_t>(1, s.length / 2);
    s.count = (n_samples - s.length) / s.hop + 1;
    return s;
}

// Segment-averaged cross-periodogram X_i(w) X_j(-w) / U of one trajectory.
inline std::vector<ComplexMatrix4> trajectory_periodogram(const std::vector<Vec4c>& x, double ds,
                                                          const FrequencyGrid& grid, const Segmentation& seg) {
    const auto w = hann(seg.length);
    double U = 0.0;
    for (double v : w) U += v * v * ds;
    std::vector<ComplexMatrix4> out(grid.size(), ComplexMatrix4::Zero());
    for (std::size_t s = 0; s < seg.count; ++s) {
        const std::size_t start = s * seg.hop;
        for (std::size_t f = 0; f < grid.size(); ++f) {
            const double om = grid[f];
            Vec4c Xp = Vec4c::Zero(), Xm = Vec4c::Zero();
            for (std::size_t k = 0; k < seg.length; ++k) {
                const cd e = std::polar(w[k] * ds, om * double(k) * ds);
                Xp += x[start + k] * e;
                Xm += x[start + k] * std::conj(e);
            }
            out[f] += Xp * Xm.transpose() / U;
        }
    }
    for (auto& M : out) M /= double(seg.count);
    return out;
}

inline double jackknife_se(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 2) return std::numeric_limits<double>::infinity();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= double(n);
    // Leave-one-out means differ from the full mean by (mean - x_i) / (n - 1).
    double acc = 0.0;
    for (double x : v) {
        double d = (mean - x) / double(n - 1);
        acc += d * d;
    }
    return std::sqrt(double(n - 1) / double(n) * acc);
}

}  // namespace detail

struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

struct SpectralEstimate {
    FrequencyGrid grid;
    std::size_t total_segments = 0;
    std::vector<ComplexMatrix4> mean;
    std::vector<Eigen::Matrix4d> stderr_re;
    std::vector<Eigen::Matrix4d> stderr_im;
    std::vector<std::vector<ComplexMatrix4>> per_trajectory;  // [trajectory][frequency]

    // Estimated :q_j:(beta) at grid index f with its jackknife error.
    Estimate quadrature(int mode, double beta, std::size_t f) const {
        Vec4c v = quadrature_vector(mode, beta);
        std::vector<double> vals;
        vals.reserve(per_trajectory.size());
        for (const auto& t : per_trajectory) vals.push_back((2.0 * (v.transpose() * t[f] * v)(0, 0)).real());
        double mu = 0.0;
        for (double x : vals) mu += x;
        mu /= double(vals.size());
        return {mu, detail::jackknife_se(vals)};
    }
};

namespace detail {

inline SpectralEstimate assemble_estimate(const FrequencyGrid& grid, std::vector<std::vector<ComplexMatrix4>> per,
                                          std::size_t segments) {
    SpectralEstimate e;
    e.grid = grid;
    e.total_segments = segments;
    const std::size_t n = per.size();
    e.mean.assign(grid.size(), ComplexMatrix4::Zero());
    e.stderr_re.assign(grid.size(), Eigen::Matrix4d::Zero());
    e.stderr_im.assign(grid.size(), Eigen::Matrix4d::Zero());
    std::vector<double> re(n), im(n);
    for (std::size_t f = 0; f < grid.size(); ++f)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                cd sum{};
                for (std::size_t t = 0; t < n; ++t) {
                    re[t] = per[t][f](i, j).real();
                    im[t] = per[t][f](i, j).imag();
                    sum += per[t][f](i, j);
                }
                e.mean[f](i, j) = sum / double(n);
                e.stderr_re[f](i, j) = jackknife_se(re);
                e.stderr_im[f](i, j) = jackknife_se(im);
            }
    e.per_trajectory = std::move(per);
    return e;
}

inline void require_stable(const SteadyState& s) {
    if (s.stable != Stability::Stable)
        throw UnstableState(std::string("stochastic simulation needs a stable state (state is ") +
                            to_string(s.stable) + ")");
}

}  // namespace detail

inline Ensemble integrate_linearized(const SteadyState& s, const ModelParams& m, const SimConfig& cfg) {
    cfg.validate();
    detail::require_stable(s);
    const ComplexMatrix4 A = drift_jacobian(s, m);
    const ComplexMatrix4 B = noise_factor(diffusion_at(s, m)).b;
    Ensemble e;
    e.sample_dt = cfg.sample_dt();
    e.trajectories.resize(std::size_t(cfg.n_traj));
    parallel_for(
        e.trajectories.size(),
        [&](std::size_t i) {
            auto& samples = e.trajectories[i].samples;
            samples.reserve(std::size_t((cfg.total_steps() - cfg.burn_steps()) / cfg.stride()));
            detail::linearized_path(A, B, cfg, i, [&](const Vec4c& x) { samples.push_back(x); });
        },
        cfg.threads);
    return e;
}

inline SpectralEstimate estimate_spectral_matrix(const Ensemble& ens, const FrequencyGrid& grid,
                                                 int segments_per_record = 2) {
    std::vector<std::vector<ComplexMatrix4>> per;
    std::size_t segments = 0;
    for (const auto& t : ens.trajectories) {
        if (t.diverged) continue;
        auto seg = detail::segmentation(t.samples.size(), segments_per_record);
        if (seg.count == 0) continue;
        per.push_back(detail::trajectory_periodogram(t.samples, ens.sample_dt, grid, seg));
        segments += seg.count;
    }
    if (segments < 8 || per.size() < 2)
        throw InsufficientData("spectral estimate needs at least 8 segments over 2 or more trajectories");
    return detail::assemble_estimate(grid, std::move(per), segments);
}

// Integrates and estimates trajectory by trajectory without keeping samples.
inline SpectralEstimate simulate_spectra(const SteadyState& s, const ModelParams& m, const SimConfig& cfg,
                                         const FrequencyGrid& grid) {
    cfg.validate();
    detail::require_stable(s);
    const ComplexMatrix4 A = drift_jacobian(s, m);
    const ComplexMatrix4 B = noise_factor(diffusion_at(s, m)).b;
    const std::size_t n_samples = std::size_t((cfg.total_steps() - cfg.burn_steps()) / cfg.stride());
    const auto seg = detail::segmentation(n_samples, cfg.segments_per_record);
    if (seg.count * std::size_t(cfg.n_traj) < 8 || cfg.n_traj < 2)
        throw InsufficientData("spectral estimate needs at least 8 segments over 2 or more trajectories");
    std::vector<std::vector<ComplexMatrix4>> per(std::size_t(cfg.n_traj));
    parallel_for(
        per.size(),
        [&](std::size_t i) {
            std::vector<Vec4c> samples;
            samples.reserve(n_samples);
            detail::linearized_path(A, B, cfg, i, [&](const Vec4c& x) { samples.push_back(x); });
            per[i] = detail::trajectory_periodogram(samples, cfg.sample_dt(), grid, seg);
        },
        cfg.threads);
    return detail::assemble_estimate(grid, std::move(per), seg.count * per.size());
}

// ---------------------------------------------------------------------------
// Full nonlinear generalized-P Langevin equations (experimental).

struct FullSimConfig {
    SimConfig base;
    double coupling_ratio = 1e-3;  // g / gamma, scales the noise as its square root
    bool noise = true;
    double guard = 1e3;
};

inline Ensemble integrate_full(const ModelParams& m, cd a1_0, cd a2_0, const FullSimConfig& fc) {
    const SimConfig& cfg = fc.base;
    cfg.validate();
    if (!(fc.coupling_ratio >= 0.0)) throw InvalidParameter("coupling_ratio must be non-negative");
    const double noise_scale = fc.noise ? std::sqrt(fc.coupling_ratio) : 0.0;
    Ensemble e;
    e.sample_dt = cfg.sample_dt();
    e.trajectories.resize(std::size_t(cfg.n_traj));
    parallel_for(
        e.trajectories.size(),
        [&](std::size_t idx) {
            Trajectory& tr = e.trajectories[idx];
            auto rng = detail::trajectory_rng(cfg.seed, idx);
            std::normal_distribution<double> normal(0.0, 1.0);
            const double sq = std::sqrt(cfg.dt);
            const long n = cfg.total_steps(), burn = cfg.burn_steps(), k = cfg.stride();
            Vec4c a = phase_point(a1_0, a2_0);
            Eigen::Vector4d xi;
            for (long step = 1; step <= n; ++step) {
                Vec4c next = a + drift(a, m) * cfg.dt;
                if (noise_scale > 0.0) {
                    for (int c = 0; c < 4; ++c) xi(c) = normal(rng);
                    next += noise_scale * (noise_factor(diffusion(a, m)).b * (xi.cast<cd>() * sq));
                }
                a = next;
                if (!a.allFinite() || a.cwiseAbs().maxCoeff() > fc.guard) {
                    tr.diverged = true;
                    break;
                }
                if (step > burn && (step - burn) % k == 0) tr.samples.push_back(a);
            }
        },
        cfg.threads);
    std::size_t bad = 0;
    for (const auto& t : e.trajectories) bad += t.diverged ? 1 : 0;
    e.divergence_fraction = double(bad) / double(e.trajectories.size());
    if (e.divergence_fraction > 0.5) {
        std::ostringstream os;
        os << "unreliable regime: " << bad << " of " << e.trajectories.size() << " trajectories diverged";
        throw Divergence(os.str());
    }
    return e;
}

// Time and ensemble average of one channel over non-diverged trajectories,
// with a per-trajectory jackknife error.
inline std::pair<cd, double> ensemble_time_average(const Ensemble& e, int channel) {
    std::vector<double> re, im;
    for (const auto& t : e.trajectories) {
        if (t.diverged || t.samples.empty()) continue;
        cd acc{};
        for (const auto& x : t.samples) acc += x(channel);
        acc /= double(t.samples.size());
        re.push_back(acc.real());
        im.push_back(acc.imag());
    }
    if (re.empty()) throw InsufficientData("no usable trajectories");
    double mr = 0, mi = 0;
    for (std::size_t i = 0; i < re.size(); ++i) {
        mr += re[i];
        mi += im[i];
    }
    mr /= double(re.size());
    mi /= double(re.size());
    return {cd(mr, mi), std::hypot(detail::jackknife_se(re), detail::jackknife_se(im))};
}

// Raw dump: little-endian f64, per sample (re, im) for the four channels,
// trajectories back to back; layout described in "<path>.json".
inline void write_trajectory_dump(const std::string& path, const Ensemble& e, const SimConfig& cfg,
                                  const nlohmann::json& extra = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidParameter("cannot open dump file '" + path + "'");
    nlohmann::json counts = nlohmann::json::array();
    for (const auto& t : e.trajectories) {
        counts.push_back(t.samples.size());
        for (const auto& x : t.samples)
            for (int c = 0; c < 4; ++c) {
                double v[2] = {x(c).real(), x(c).imag()};
                for (double d : v) {
                    std::uint64_t bits;
                    std::memcpy(&bits, &d, 8);
                    unsigned char buf[8];
                    for (int b = 0; b < 8; ++b) buf[b] = static_cast<unsigned char>(bits >> (8 * b));
                    out.write(reinterpret_cast<const char*>(buf), 8);
                }
            }
    }
    nlohmann::json side = {
        {"format", "f64-le"},
        {"record", "per sample: re,im for channels alpha1, alpha1+, alpha2, alpha2+"},
        {"sample_dt", e.sample_dt},
        {"samples_per_trajectory", counts},
        {"seed", cfg.seed},
        {"config", {{"dt", cfg.dt}, {"duration", cfg.duration}, {"n_traj", cfg.n_traj}, {"burn_in", cfg.burn_in},
                    {"sample_interval", cfg.sample_interval}}},
    };
    if (!extra.is_null()) side["extra"] = extra;
    std::ofstream js(path + ".json");
    js << side.dump(2) << '\n';
}

}  // namespace vkerr
