#pragma once

// Boundary voltage laws.
//
//  * analytic_feed: V = -k1 [ sigma h2 h3 Bt B2 (P wdot_x)(L) + B3 wdot_x(L) ],
//    the dual-operator feedback of the analyzed model. Two evaluation routes
//    are kept: the direct smoothed-trace form and the substitution through
//    the shear rate.
//
//  * discrete_sec4: the published bracket
//        (sC + Bt)/sC * wdot_x(L)|bw3 - phi2dot(L)/(sC Bt Ct) ,
//    gain k1 applied in the boundary rows, not in the bracket. The wired
//    closed loop applies the bracket with a leading minus (see model.hpp).
//
// In the filtered mode the bracket needs the shear rate and the tip
// velocity, both of which depend affinely on the applied row load, so the
// voltage is resolved as the exact fixed point of that affine map.

#include <cmath>

#include "mmbeam/model.hpp"

namespace mmbeam {

/// The published voltage bracket, evaluated from trace values.
inline double sec4_bracket(double wdot_tip, double wdot_m1, double wdot_m2, double phi2dot_tip,
                           double dx, const BeamCoefficients& c) {
    const double sC = c.sigmaC();
    const double gs = (sC + c.B_tilde) / sC;
    return gs * (3.0 * wdot_tip - 4.0 * wdot_m1 + wdot_m2) / (2.0 * dx) -
           phi2dot_tip / (sC * c.B_tilde * c.C_tilde);
}

/// The reduced analytic law written through the shear rate.
inline double analytic_bracket_phi(double wdot_x_tip, double phi2dot_tip,
                                   const BeamCoefficients& c) {
    return (c.h2 * c.h3 * c.B_tilde * c.B2 / c.C_tilde + c.B3) * wdot_x_tip -
           (c.h2 * c.h3 * c.B2 / c.C_tilde) * phi2dot_tip;
}

namespace detail {

/// Row load that the filtered mode's boundary rows apply for a given law,
/// resolved as the exact fixed point of load -> load.
inline double viscous_row_load(const SemiDiscreteSystem& sys, const BeamState& st, Law law,
                               double k1) {
    if (law == Law::off) return 0.0;
    auto load_of = [&](double load_in) {
        StateDerivative d = sys.rhs(st, load_in);
        const double dx = sys.grid.dx;
        if (law == Law::discrete_sec4) {
            const double br = sec4_bracket(d.wdot[sys.n()], d.wdot[sys.n() - 1],
                                           d.wdot[sys.n() - 2], d.phi2dot[sys.n()], dx,
                                           sys.coeffs);
            return -k1 * br;  // see note above on the wired sign
        }
        // analytic law: smoothed trace of the velocity slope
        Eigen::VectorXd ux = sys.G1 * d.wdot.segment(1, sys.n());
        Eigen::VectorXd Pux = sys.sigma->apply_solve(ux);
        const double q = sys.coeffs.sigma * sys.coeffs.h2 * sys.coeffs.h3 * sys.coeffs.B_tilde *
                             sys.coeffs.B2 * Pux[sys.n()] +
                         sys.coeffs.B3 * ux[sys.n()];
        return -k1 * q;
    };
    const double a = load_of(0.0);
    const double b1 = load_of(1.0);
    const double slope = b1 - a;
    if (std::abs(1.0 - slope) < 1e-12)
        throw NonConvergence("voltage fixed point is ill-posed (unit slope)");
    return a / (1.0 - slope);
}

} // namespace detail

/// Voltage of the analytic feedback law for the current state.
inline double voltage_analytic(const SemiDiscreteSystem& sys, const BeamState& st,
                               const ControllerConfig& cfg) {
    if (cfg.law == Law::off) return 0.0;
    const auto& c = sys.coeffs;
    if (sys.mode == Mode::elliptic_constraint) {
        Eigen::VectorXd u = st.wdot.segment(1, sys.n());
        if (cfg.trace == TraceMethod::p_sigma_direct)
            return -cfg.k1 * sys.b.dot(u);
        Eigen::VectorXd ux = sys.G1 * u;
        Eigen::VectorXd phid = sys.solve_phi_constraint(st.wdot, 0.0);
        return -cfg.k1 * analytic_bracket_phi(ux[sys.n()], phid[sys.n()], c);
    }
    // filtered mode: velocities depend on the applied load
    const double load = detail::viscous_row_load(sys, st, Law::analytic_feed, cfg.k1);
    if (cfg.trace == TraceMethod::p_sigma_direct) return load;  // gain inside the law
    StateDerivative d = sys.rhs(st, load);
    Eigen::VectorXd ux = sys.G1 * d.wdot.segment(1, sys.n());
    return -cfg.k1 * analytic_bracket_phi(ux[sys.n()], d.phi2dot[sys.n()], c);
}

/// The published discrete voltage bracket for the current state (filtered
/// mode). The row load of the wired loop is -k1 times this value.
inline double voltage_discrete_sec4(const SemiDiscreteSystem& sys, const BeamState& st,
                                    const ControllerConfig& cfg) {
    if (cfg.law == Law::off) return 0.0;
    if (sys.mode != Mode::viscous_filtered)
        throw ValidationError("discrete_sec4 voltage needs the filtered mode");
    const double load = detail::viscous_row_load(sys, st, Law::discrete_sec4, cfg.k1);
    return -load / cfg.k1;
}

/// Instantaneous boundary power gamma*V*[h2 h3 sigma Bt (P wdot_x)(L) +
/// (B3/B4) wdot_x(L)] (the model's energy-flux form).
inline double boundary_power(const SemiDiscreteSystem& sys, const BeamState& st, double voltage) {
    const auto& c = sys.coeffs;
    Eigen::VectorXd ux = sys.G1 * st.wdot.segment(1, sys.n());
    Eigen::VectorXd Pux = sys.sigma->apply_solve(ux);
    return c.gamma * voltage *
           (c.h2 * c.h3 * c.sigma * c.B_tilde * Pux[sys.n()] + (c.B3 / c.B4) * ux[sys.n()]);
}

/// Energy-consistent boundary power (gamma/B4) V b^T u; equals dE/dt for the
/// constraint-mode closed loop.
inline double boundary_power_consistent(const SemiDiscreteSystem& sys, const BeamState& st,
                                        double voltage) {
    Eigen::VectorXd u = st.wdot.segment(1, sys.n());
    return (sys.coeffs.gamma / sys.coeffs.B4) * voltage * sys.b.dot(u);
}

} // namespace mmbeam
