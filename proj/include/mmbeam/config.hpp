#pragma once

// Model coefficients for the electrostatic Mead-Marcus sandwich beam:
// raw per-layer material constants, the derived composite coefficients,
// and the time nondimensionalization t = A1 * t_star.

#include <cmath>
#include <optional>
#include <string>

#include "mmbeam/errors.hpp"

namespace mmbeam {

/// Per-layer material data. Layer 1 and 3 are the stiff/piezoelectric faces,
/// layer 2 is the compliant core. SI units throughout.
struct MaterialConstants {
    double L = 1.0;           // beam length [m]
    double h1 = 0.1;          // face thickness [m]
    double h2 = 0.01;         // core thickness [m]
    double h3 = 0.1;          // piezo layer thickness [m]
    double rho1 = 7600.0;     // densities [kg/m^3]
    double rho2 = 5000.0;
    double rho3 = 7600.0;
    double alpha1 = 1.4e7;    // elastic moduli [N/m^2]
    double alpha2 = 1.0e5;
    double alpha3 = 1.4e7;
    double gamma = 1.0e-3;    // piezoelectric constant [C/m^2]
    double beta = 1.0e6;      // impermittivity [m/F]
    double G2 = 100.0e9;      // core shear modulus [N/m^2]

    void validate() const {
        auto need = [](double v, const char* name) {
            if (!(v > 0.0))
                throw NonPositiveCoefficient(std::string(name) + " <= 0");
        };
        need(L, "L");
        need(h1, "h1"); need(h2, "h2"); need(h3, "h3");
        need(rho1, "rho1"); need(rho2, "rho2"); need(rho3, "rho3");
        need(alpha1, "alpha1"); need(alpha2, "alpha2"); need(alpha3, "alpha3");
        need(gamma, "gamma"); need(beta, "beta"); need(G2, "G2");
    }
};

/// Direct values for the composite coefficients. Any field that is set wins
/// over the value derived from MaterialConstants.
struct CoefficientOverrides {
    std::optional<double> m, A, B1, B2, B3, B4, C, sigma;
    std::optional<double> gamma, beta, h2, h3, L;
};

/// Composite model coefficients. A_tilde, B_tilde, C_tilde are the reduced
/// stiffness/coupling constants of the electrostatic model; sigma is the
/// core shear parameter.
struct BeamCoefficients {
    double m = 0.0;        // lineal mass density [kg/m]
    double A = 0.0;        // bending stiffness before the charge reduction
    double B1 = 0.0;       // shear-bending coupling
    double B2 = 0.0;       // charge-shear coupling
    double B3 = 0.0;       // charge-bending coupling
    double B4 = 1.0;       // charge self-coefficient
    double C = 1.0;        // shear compliance base
    double sigma = 0.0;    // shear parameter [1/m^2 scale]
    double gamma = 1e-3;
    double beta = 1e6;
    double h2 = 0.01;
    double h3 = 0.1;
    double L = 1.0;

    // derived
    double A_tilde = 0.0;  // A - gamma^2 beta B3^2 / B4
    double B_tilde = 0.0;  // B1 - gamma B2 B3 / B4
    double C_tilde = 0.0;  // C + gamma h2 h3 B2^2 / B4

    /// kernel/stiffness parameter of the shear smoothing operator
    double sigmaC() const { return sigma * C_tilde; }

    /// coupling weight of the nonlocal term in the energy functional
    double energy_coupling() const {
        return gamma * beta * sigma * h2 * h3 * B_tilde * B_tilde;
    }

    void validate() const {
        auto need = [](double v, const char* name) {
            if (!(v > 0.0))
                throw NonPositiveCoefficient(std::string(name) + " <= 0");
        };
        need(m, "m");
        need(A_tilde, "A_tilde");
        need(B_tilde, "B_tilde");
        need(C_tilde, "C_tilde");
        need(sigma, "sigma");
        need(B2, "B2"); need(B3, "B3"); need(B4, "B4");
        need(gamma, "gamma"); need(beta, "beta");
        need(h2, "h2"); need(h3, "h3"); need(L, "L");
    }
};

// The composite map (rho_i, alpha_i, G2) -> (m, A, B1..B4, C, sigma) is not
// standardized; the defaults below are a documented extrapolation from
// classical sandwich-beam theory:
//   m     = rho1 h1 + rho2 h2 + rho3 h3          (lineal density)
//   A     = (alpha1 h1^3 + alpha2 h2^3 + alpha3 h3^3)/12
//           (layerwise bending about each layer's own centroid)
//   H     = (h1 + 2 h2 + h3)/2                   (face-centroid distance)
//   B1    = H                                    (shear-bending arm)
//   B2    = h2^2                                 (normalized charge-shear coupling)
//   B3    = h3/2                                 (charge-bending arm)
//   B4    = 1, C = 1                             (normalized)
//   sigma = (G2/h2) (1/(alpha1 h1) + 1/(alpha3 h3))
// Tests that need exact provenance pass the composite coefficients directly.
inline BeamCoefficients derive_coefficients(const MaterialConstants& raw,
                                            const CoefficientOverrides& ov = {}) {
    raw.validate();
    BeamCoefficients c;
    const double Hc = (raw.h1 + 2.0 * raw.h2 + raw.h3) / 2.0;
    c.m  = ov.m.value_or(raw.rho1 * raw.h1 + raw.rho2 * raw.h2 + raw.rho3 * raw.h3);
    c.A  = ov.A.value_or((raw.alpha1 * raw.h1 * raw.h1 * raw.h1 +
                          raw.alpha2 * raw.h2 * raw.h2 * raw.h2 +
                          raw.alpha3 * raw.h3 * raw.h3 * raw.h3) / 12.0);
    c.B1 = ov.B1.value_or(Hc);
    c.B2 = ov.B2.value_or(raw.h2 * raw.h2);
    c.B3 = ov.B3.value_or(raw.h3 / 2.0);
    c.B4 = ov.B4.value_or(1.0);
    c.C  = ov.C.value_or(1.0);
    c.sigma = ov.sigma.value_or((raw.G2 / raw.h2) *
                                (1.0 / (raw.alpha1 * raw.h1) + 1.0 / (raw.alpha3 * raw.h3)));
    c.gamma = ov.gamma.value_or(raw.gamma);
    c.beta  = ov.beta.value_or(raw.beta);
    c.h2 = ov.h2.value_or(raw.h2);
    c.h3 = ov.h3.value_or(raw.h3);
    c.L  = ov.L.value_or(raw.L);

    c.A_tilde = c.A - c.gamma * c.gamma * c.beta * c.B3 * c.B3 / c.B4;
    c.B_tilde = c.B1 - c.gamma * c.B2 * c.B3 / c.B4;
    c.C_tilde = c.C + c.gamma * c.h2 * c.h3 * c.B2 * c.B2 / c.B4;
    c.validate();
    return c;
}

/// Time scale of the nondimensionalization t = A1 * t_star.
inline double time_scale(const BeamCoefficients& c) {
    c.validate();
    return c.L * std::sqrt(c.m / c.A_tilde);
}

} // namespace mmbeam
