#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/LU>
#include <algorithm>

#include "vkerr/errors.hpp"
#include "vkerr/model.hpp"
#include "vkerr/steady.hpp"

namespace vkerr {

class FrequencyGrid {
public:
    FrequencyGrid() = default;
    explicit FrequencyGrid(std::vector<double> omegas) : omegas_(std::move(omegas)) {
        for (std::size_t k = 0; k < omegas_.size(); ++k) {
            if (!std::isfinite(omegas_[k])) throw InvalidParameter("frequency grid has a non-finite value");
            if (k > 0 && !(omegas_[k] > omegas_[k - 1]))
                throw InvalidParameter("frequency grid must be strictly increasing");
        }
    }

    static FrequencyGrid linear(double lo, double hi, std::size_t n) {
        if (n < 2 || !(hi > lo)) throw InvalidParameter("linear grid needs n >= 2 and hi > lo");
        std::vector<double> w(n);
        for (std::size_t k = 0; k < n; ++k) w[k] = lo + (hi - lo) * double(k) / double(n - 1);
        w.back() = hi;
        return FrequencyGrid(std::move(w));
    }

    // Log-spaced on [lo, hi], optionally preceded by omega = 0.
    static FrequencyGrid log_dense(double lo, double hi, std::size_t n, bool with_zero) {
        if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw InvalidParameter("log grid needs n >= 2 and 0 < lo < hi");
        std::vector<double> w;
        if (with_zero) w.push_back(0.0);
        const double a = std::log(lo), b = std::log(hi);
        for (std::size_t k = 0; k < n; ++k) w.push_back(std::exp(a + (b - a) * double(k) / double(n - 1)));
        w.back() = hi;
        return FrequencyGrid(std::move(w));
    }

    const std::vector<double>& omegas() const { return omegas_; }
    std::size_t size() const { return omegas_.size(); }
    double operator[](std::size_t k) const { return omegas_[k]; }
    auto begin() const { return omegas_.begin(); }
    auto end() const { return omegas_.end(); }

private:
    std::vector<double> omegas_;
};

inline ComplexMatrix4 drift_jacobian(const SteadyState& s, const ModelParams& m) {
    return drift_jacobian(s.point(), m);
}

inline ComplexMatrix4 diffusion_at(const SteadyState& s, const ModelParams& m) { return diffusion(s.point(), m); }

// Change of basis to real quadratures (X, Y) = (da + da+, -i (da - da+)) per mode.
inline ComplexMatrix4 quadrature_basis() {
    ComplexMatrix4 T = ComplexMatrix4::Zero();
    for (int k : {0, 2}) {
        T(k, k) = 1.0;
        T(k, k + 1) = 1.0;
        T(k + 1, k) = -I_unit;
        T(k + 1, k + 1) = I_unit;
    }
    return T;
}

// Drift Jacobian and diffusion frozen at one operating point. Spectral
// quantities come from LU solves of (A^T +- i w), never from inverses.
// Bilinear forms run in the real quadrature basis, where A and D are real on
// the classical manifold; the two solves are then exact complex conjugates.
class Linearization {
public:
    Linearization(const SteadyState& s, const ModelParams& m)
        : m_(m), A_(drift_jacobian(s, m)), D_(diffusion_at(s, m)) {
        const ComplexMatrix4 T = quadrature_basis();
        const ComplexMatrix4 Tinv = T.inverse();
        const ComplexMatrix4 Ar = T * A_ * Tinv;
        const ComplexMatrix4 Dr = T * D_ * T.transpose();
        const double sa = std::max(1.0, Ar.cwiseAbs().maxCoeff()), sd = std::max(1.0, Dr.cwiseAbs().maxCoeff());
        if (Ar.imag().cwiseAbs().maxCoeff() > 1e-12 * sa || Dr.imag().cwiseAbs().maxCoeff() > 1e-12 * sd)
            throw NumericalConsistency("linearization point is not on the classical manifold");
        Ar_ = Ar.real();
        Dr_ = Dr.real();
        to_real_ = Tinv.transpose();
    }

    const ComplexMatrix4& jacobian() const { return A_; }
    const ComplexMatrix4& diffusion() const { return D_; }
    const ModelParams& params() const { return m_; }

    // Both shifted transposes factored once for a fixed frequency.
    class AtFrequency {
    public:
        AtFrequency(const Linearization& lin, double omega)
            : lin_(&lin), plus_(lin.factor_real(omega, +1.0)), minus_(lin.factor_real(omega, -1.0)) {}

        // u^T M(w) v with M(w) = (A + i w)^-1 D (A^T - i w)^-1, u and v given in
        // the (da1, da1+, da2, da2+) basis.
        cd bilinear(const Vec4c& u, const Vec4c& v) const {
            Vec4c x = plus_.solve(lin_->to_real_ * u);
            Vec4c y = minus_.solve(lin_->to_real_ * v);
            return x.transpose() * lin_->Dr_.cast<cd>() * y;
        }

    private:
        const Linearization* lin_;
        Eigen::PartialPivLU<ComplexMatrix4> plus_;
        Eigen::PartialPivLU<ComplexMatrix4> minus_;
    };

    AtFrequency at(double omega) const { return AtFrequency(*this, omega); }

    cd bilinear(double omega, const Vec4c& u, const Vec4c& v) const { return at(omega).bilinear(u, v); }

    // Full matrix in the original basis: M = X^T D Y, X = (A^T + i w)^-1, Y = (A^T - i w)^-1.
    ComplexMatrix4 spectral_matrix(double omega) const {
        auto lp = factor(A_, omega, +1.0);
        auto lm = factor(A_, omega, -1.0);
        ComplexMatrix4 X = lp.solve(ComplexMatrix4::Identity());
        ComplexMatrix4 Y = lm.solve(ComplexMatrix4::Identity());
        return X.transpose() * D_ * Y;
    }

    // True when (A^T + i w) is too ill-conditioned to evaluate spectra.
    bool singular_at(double omega) const {
        try {
            (void)factor(A_, omega, 1.0);
            (void)factor_real(omega, 1.0);
            (void)factor_real(omega, -1.0);
            return false;
        } catch (const NearSingular&) {
            return true;
        }
    }

private:
    Eigen::PartialPivLU<ComplexMatrix4> factor_real(double omega, double sign) const {
        return factor(Ar_.cast<cd>(), omega, sign);
    }

    Eigen::PartialPivLU<ComplexMatrix4> factor(const ComplexMatrix4& A, double omega, double sign) const {
        ComplexMatrix4 K = A.transpose();
        K.diagonal().array() += sign * I_unit * omega;
        Eigen::PartialPivLU<ComplexMatrix4> lu(K);
        const double rc = lu.rcond();
        if (!(rc >= 1e-14)) {
            std::ostringstream os;
            os << "spectral matrix is singular at omega=" << omega << " (delta=" << m_.delta << ", E2=" << m_.E2()
               << ", rcond=" << rc << "); approach the bifurcation instead";
            throw NearSingular(os.str(), omega, m_.delta, m_.E2());
        }
        return lu;
    }

    ModelParams m_;
    ComplexMatrix4 A_;
    ComplexMatrix4 D_;
    Eigen::Matrix4d Ar_;
    Eigen::Matrix4d Dr_;
    ComplexMatrix4 to_real_;
};

inline ComplexMatrix4 spectral_matrix(const SteadyState& s, const ModelParams& m, double omega) {
    return Linearization(s, m).spectral_matrix(omega);
}

inline ComplexMatrix4 output_spectral_matrix(const SteadyState& s, const ModelParams& m, double omega) {
    return 2.0 * spectral_matrix(s, m, omega);
}

}  // namespace vkerr
