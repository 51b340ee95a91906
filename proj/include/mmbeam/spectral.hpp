#pragma once

// Numerical counterparts of the operator-theoretic stability statements:
// spectrum of the discrete generator, dissipativity in the energy inner
// product, and the spectral abscissa.
//
// Constraint mode: the generator is an ordinary dense matrix on stacked
// (w, wdot) and the energy Gram is block-diagonal (S, m W), so dissipativity
// is a Rayleigh-quotient computation and the closed-loop identity
//   Re<A z, z>_E = -(k1 gamma / B4) (b^T u)^2
// holds to roundoff by construction.
//
// Filtered mode: the system is the pencil E ydot = A y with algebraic tip
// rows; its physical spectrum is the finite part of the QZ eigenvalues.

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mmbeam/model.hpp"

namespace mmbeam {

struct DiscreteGenerator {
    Mode mode = Mode::elliptic_constraint;
    // constraint mode
    Eigen::MatrixXd A;          // closed- or open-loop generator
    Eigen::MatrixXd S;          // stiffness block of the Gram
    Eigen::VectorXd Mw;         // mass diagonal of the Gram
    Eigen::VectorXd b;          // boundary trace functional
    double feedback_gain = 0.0; // k1 gamma / B4 folded into A (0 = open loop)
    // filtered mode
    Eigen::MatrixXd Ep, Ap;

    int dim() const { return mode == Mode::elliptic_constraint ? static_cast<int>(A.rows())
                                                               : static_cast<int>(Ap.rows()); }
};

inline DiscreteGenerator assemble_generator(const SemiDiscreteSystem& sys) {
    if (sys.n() > 400)
        throw ValidationError("dense eigendecomposition capped at n = 400");
    DiscreteGenerator g;
    g.mode = sys.mode;
    if (sys.mode == Mode::elliptic_constraint) {
        g.A = sys.Acl;
        g.S = sys.S;
        g.Mw = sys.Mw;
        g.b = sys.b;
        g.feedback_gain = sys.ctrl.law == Law::analytic_feed
                              ? sys.ctrl.k1 * sys.coeffs.gamma / sys.coeffs.B4
                              : 0.0;
    } else {
        g.Ep = sys.Ep;
        g.Ap = sys.Ap;
    }
    return g;
}

/// All finite eigenvalues, sorted by real part descending.
inline std::vector<std::complex<double>> spectrum(const DiscreteGenerator& g) {
    std::vector<std::complex<double>> out;
    if (g.mode == Mode::elliptic_constraint) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(g.A, /*computeEigenvectors=*/false);
        if (es.info() != Eigen::Success) throw EigensolverFailure("dense eigensolver failed");
        for (int i = 0; i < g.A.rows(); ++i) out.push_back(es.eigenvalues()[i]);
    } else {
        Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges;
        ges.compute(g.Ap, g.Ep, /*computeEigenvectors=*/false);
        if (ges.info() != Eigen::Success) throw EigensolverFailure("QZ eigensolver failed");
        const auto alphas = ges.alphas();
        const auto betas = ges.betas();
        double sa = 0.0, sb = 0.0;
        for (int i = 0; i < alphas.size(); ++i) {
            sa = std::max(sa, std::abs(alphas[i]));
            sb = std::max(sb, std::abs(betas[i]));
        }
        for (int i = 0; i < alphas.size(); ++i) {
            if (std::abs(betas[i]) > 1e-10 * std::max(1.0, sb)) {
                const std::complex<double> lam = alphas[i] / betas[i];
                if (std::isfinite(lam.real()) && std::isfinite(lam.imag()) &&
                    std::abs(lam) < 1e12)
                    out.push_back(lam);
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.real() > b.real(); });
    return out;
}

inline double spectral_abscissa(const std::vector<std::complex<double>>& spec) {
    if (spec.empty()) throw EigensolverFailure("empty spectrum");
    double m = spec.front().real();
    for (const auto& l : spec) m = std::max(m, l.real());
    return m;
}

inline double spectral_abscissa(const DiscreteGenerator& g) {
    return spectral_abscissa(spectrum(g));
}

inline double min_modulus(const std::vector<std::complex<double>>& spec) {
    if (spec.empty()) throw EigensolverFailure("empty spectrum");
    double m = std::abs(spec.front());
    for (const auto& l : spec) m = std::min(m, std::abs(l));
    return m;
}

struct DissipativitySample {
    double rayleigh = 0.0;        // Re<A z, z>_E / ||z||_E^2
    double numerator = 0.0;       // Re<A z, z>_E
    double boundary_term = 0.0;   // -(k1 gamma/B4) (b^T u)^2
    double relative_mismatch = 0.0;
};

struct DissipativityReport {
    double max_rayleigh = -1e300;
    double max_relative_mismatch = 0.0;
    std::vector<DissipativitySample> samples;
};

/// Rayleigh-quotient dissipativity check over random admissible states
/// (constraint-mode generators).
inline DissipativityReport dissipativity_check(const DiscreteGenerator& g, int samples,
                                               std::uint64_t seed = 1) {
    if (g.mode != Mode::elliptic_constraint)
        throw ValidationError("dissipativity check runs on the constraint-mode generator");
    const int n = static_cast<int>(g.S.rows());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    DissipativityReport rep;
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd z(2 * n);
        for (int i = 0; i < 2 * n; ++i) z[i] = dist(rng);
        Eigen::VectorXd Az = g.A * z;
        const Eigen::VectorXd w = z.head(n), u = z.tail(n);
        const Eigen::VectorXd dw = Az.head(n), du = Az.tail(n);
        // <A z, z>_E = dw^T S w + du^T (Mw u)
        const double num = dw.dot(g.S * w) + du.dot(g.Mw.cwiseProduct(u));
        const double den = w.dot(g.S * w) + u.dot(g.Mw.cwiseProduct(u));
        DissipativitySample smp;
        smp.numerator = num;
        smp.rayleigh = num / den;
        const double bu = g.b.dot(u);
        smp.boundary_term = -g.feedback_gain * bu * bu;
        const double scale = std::max(std::abs(smp.boundary_term), 1e-300);
        smp.relative_mismatch = (g.feedback_gain > 0.0)
                                    ? std::abs(num - smp.boundary_term) / scale
                                    : std::abs(num) / den;
        rep.max_rayleigh = std::max(rep.max_rayleigh, smp.rayleigh);
        rep.max_relative_mismatch = std::max(rep.max_relative_mismatch, smp.relative_mismatch);
        rep.samples.push_back(smp);
    }
    return rep;
}

} // namespace mmbeam
