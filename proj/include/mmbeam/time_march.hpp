#pragma once

// Time integration, energy traces, and decay-rate fitting.
//
// Default scheme is the implicit midpoint rule: for the constraint mode the
// closed-loop generator is a constant matrix and midpoint conserves the
// energy of its skew part exactly, so any observed decay belongs to the
// model; for the filtered mode the scheme advances the matrix pencil, the
// algebraic tip rows are enforced at the step midpoints, and the trace is
// sampled there.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mmbeam/controller.hpp"
#include "mmbeam/model.hpp"

namespace mmbeam {

enum class Scheme { implicit_midpoint, rk4 };

struct IntegratorConfig {
    Scheme scheme = Scheme::implicit_midpoint;
    double dt = 1e-3;          // nondimensional step
    double t_end = 5.0;        // nondimensional horizon
    int snapshot_stride = 0;   // 0 = no snapshots
    bool conservation_guard = false;  // abort if a conservative run grows

    void validate() const {
        if (!(dt > 0.0)) throw ValidationError("dt > 0 required");
        if (!(t_end > 0.0)) throw ValidationError("t_end > 0 required");
    }
};

struct SimulationTrace {
    std::vector<double> t_star, t_real, energy, energy_normalized, voltage, w_tip, phi2_tip;
    std::vector<std::pair<int, BeamState>> snapshots;
    double rk4_dt_bound = 0.0;  // logged explicit stability bound (0 if unused)
};

inline double energy(const SemiDiscreteSystem& sys, const BeamState& st) {
    return sys.energy(st);
}

/// Initial transverse profile: three bumps. `gaussian` uses the decaying
/// exponent; `printed` keeps the growing sign that appears in the source
/// description of the experiment.
enum class InitialData { gaussian, printed };

inline BeamState make_initial_state(const SemiDiscreteSystem& sys,
                                    InitialData kind = InitialData::gaussian) {
    const int n = sys.n();
    const double L = sys.coeffs.L;
    const double dx = sys.grid.dx;
    Eigen::VectorXd g(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double x = sys.grid.node(i);
        double s = 0.0;
        for (int k = 2; k <= 4; ++k) {
            const double r = (x - k * L / 5.0) / (0.2 * L);
            s += (kind == InitialData::gaussian) ? std::exp(-r * r) : std::exp(r * r);
        }
        g[i] = 1e-4 * s;
    }
    // project onto the clamped end: remove value and one-sided slope
    const double slope = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * dx);
    for (int i = 0; i <= n; ++i) g[i] -= g[0] + slope * (sys.grid.node(i) - sys.grid.node(0));
    g[0] = 0.0;

    BeamState st = BeamState::zero(n);
    st.w = g;
    st.wdot = g;
    st.wdot[0] = 0.0;
    if (sys.mode == Mode::viscous_filtered) {
        st.phi2 = sys.solve_phi_constraint(st.w, 0.0);
        // make the tip values consistent with the boundary rows (affine fixed
        // point over the row load)
        auto tips_with = [&](double load) {
            BeamState s2 = st;
            sys.project_tips(s2, load);
            return s2;
        };
        if (sys.ctrl.law != Law::off) {
            auto load_from = [&](double load) {
                BeamState s2 = tips_with(load);
                return detail::viscous_row_load(sys, s2, sys.ctrl.law, sys.ctrl.k1);
            };
            const double a = load_from(0.0);
            const double b = load_from(1.0);
            const double slope_v = b - a;
            const double vstar = std::abs(1.0 - slope_v) > 1e-12 ? a / (1.0 - slope_v) : a;
            st = tips_with(vstar);
        } else {
            st = tips_with(0.0);
        }
        StateDerivative d = sys.rhs(st, sys.ctrl.law == Law::off
                                            ? 0.0
                                            : detail::viscous_row_load(sys, st, sys.ctrl.law,
                                                                       sys.ctrl.k1));
        st.wdot[n] = d.wdot[n];
    } else {
        st.phi2 = sys.solve_phi_constraint(st.w, 0.0);
    }
    return st;
}

namespace detail {

/// Midpoint stepper with the controller folded into constant matrices.
class MidpointStepper {
public:
    MidpointStepper(const SemiDiscreteSystem& sys, double dt_star) : sys_(sys), dt_(dt_star) {
        if (sys.mode == Mode::elliptic_constraint) {
            const double a1 = time_scale(sys.coeffs);
            const double h = dt_star * a1;  // dimensional step
            const int dim = sys.constraint_dim();
            Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
            lhs_.compute(I - 0.5 * h * sys.Acl);
            rhs_mat_ = I + 0.5 * h * sys.Acl;
            h_ = h;
        } else {
            lhs_.compute(sys.Ep - 0.5 * dt_star * sys.Ap);
            rhs_mat_ = sys.Ep + 0.5 * dt_star * sys.Ap;
            h_ = dt_star;
        }
    }

    Eigen::VectorXd advance(const Eigen::VectorXd& y) const {
        Eigen::VectorXd out = lhs_.solve(rhs_mat_ * y);
        if (!out.allFinite()) throw NonConvergence("midpoint solve produced non-finite values");
        return out;
    }

    double h() const { return h_; }

private:
    const SemiDiscreteSystem& sys_;
    double dt_, h_ = 0.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lhs_;
    Eigen::MatrixXd rhs_mat_;
};

inline double estimate_spectral_radius(const Eigen::MatrixXd& A, int iters = 30) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(A.rows()).normalized();
    double lam = 0.0;
    for (int k = 0; k < iters; ++k) {
        Eigen::VectorXd w = A * v;
        lam = w.norm();
        if (lam == 0.0) return 0.0;
        v = w / lam;
    }
    return lam;
}

} // namespace detail

/// One implicit-midpoint step of the packed state (utility wrapper; run()
/// factors the step matrix once instead).
inline BeamState step(const SemiDiscreteSystem& sys, const BeamState& st,
                      const IntegratorConfig& cfg) {
    cfg.validate();
    detail::MidpointStepper stp(sys, cfg.dt);
    if (sys.mode == Mode::elliptic_constraint) {
        Eigen::VectorXd z = sys.pack_constraint(st);
        z = stp.advance(z);
        BeamState out = sys.unpack_constraint(z, st.time + cfg.dt);
        const double v = voltage_analytic(sys, out, sys.ctrl);
        out.phi2 = sys.solve_phi_constraint(out.w, v);
        return out;
    }
    const double load0 = detail::viscous_row_load(sys, st, sys.ctrl.law, sys.ctrl.k1);
    Eigen::VectorXd y = sys.pack_viscous(st, load0);
    Eigen::VectorXd ynew = stp.advance(y);
    Eigen::VectorXd ydot = (ynew - y) / cfg.dt;
    return sys.unpack_viscous(ynew, ydot, st.time + cfg.dt);
}

inline SimulationTrace run_rk4(const SemiDiscreteSystem& sys, const BeamState& initial,
                               const IntegratorConfig& cfg, SimulationTrace tr);

/// Full simulation. Deterministic given (sys, initial, cfg).
inline SimulationTrace run(const SemiDiscreteSystem& sys, const BeamState& initial,
                           const IntegratorConfig& cfg) {
    cfg.validate();
    SimulationTrace tr;
    const double a1 = time_scale(sys.coeffs);
    const int steps = static_cast<int>(std::ceil(cfg.t_end / cfg.dt - 1e-12));
    const bool conservative = sys.ctrl.law == Law::off && sys.kappa == 0.0 &&
                              sys.mode == Mode::elliptic_constraint;

    auto push = [&](double ts, double E, double E0, double V, const BeamState& st) {
        tr.t_star.push_back(ts);
        tr.t_real.push_back(ts * a1);
        tr.energy.push_back(E);
        tr.energy_normalized.push_back(E0 > 0.0 ? E / E0 : 0.0);
        tr.voltage.push_back(V);
        tr.w_tip.push_back(st.w[sys.n()]);
        tr.phi2_tip.push_back(st.phi2[sys.n()]);
    };

    if (cfg.scheme == Scheme::rk4) return run_rk4(sys, initial, cfg, tr);

    detail::MidpointStepper stp(sys, cfg.dt);
    if (sys.mode == Mode::elliptic_constraint) {
        Eigen::VectorXd z = sys.pack_constraint(initial);
        BeamState st = initial;
        double V = voltage_analytic(sys, st, sys.ctrl);
        st.phi2 = sys.solve_phi_constraint(st.w, V);
        const double E0 = sys.energy(st);
        push(initial.time, E0, E0, V, st);
        for (int k = 1; k <= steps; ++k) {
            z = stp.advance(z);
            st = sys.unpack_constraint(z, initial.time + k * cfg.dt);
            V = voltage_analytic(sys, st, sys.ctrl);
            st.phi2 = sys.solve_phi_constraint(st.w, V);
            const double E = sys.energy(st);
            if (conservative && cfg.conservation_guard && E > E0 * (1.0 + 1e-6))
                throw StabilityViolation("conservative run grew by more than 1e-6 relative");
            push(st.time, E, E0, V, st);
            if (cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0)
                tr.snapshots.emplace_back(k, st);
        }
        return tr;
    }

    // filtered mode: sample at step midpoints, where the algebraic rows hold
    const double load0 = detail::viscous_row_load(sys, initial, sys.ctrl.law, sys.ctrl.k1);
    Eigen::VectorXd y = sys.pack_viscous(initial, load0);
    double E0 = 0.0;
    for (int k = 0; k < steps; ++k) {
        Eigen::VectorXd ynew = stp.advance(y);
        Eigen::VectorXd ymid = 0.5 * (y + ynew);
        Eigen::VectorXd ydmid = (ynew - y) / cfg.dt;
        const double tmid = initial.time + (k + 0.5) * cfg.dt;
        BeamState st = sys.unpack_viscous(ymid, ydmid, tmid);
        double V = 0.0;
        if (sys.ctrl.law == Law::discrete_sec4) {
            const double tip_dot = ydmid[sys.iw(sys.n())];
            V = sec4_bracket(tip_dot, ymid[sys.iu(sys.n() - 1)], ymid[sys.iu(sys.n() - 2)],
                             ydmid[sys.ip(sys.n())], sys.grid.dx, sys.coeffs);
        } else if (sys.ctrl.law == Law::analytic_feed) {
            Eigen::VectorXd ux = sys.G1 * st.wdot.segment(1, sys.n());
            Eigen::VectorXd Pux = sys.sigma->apply_solve(ux);
            V = -sys.ctrl.k1 *
                (sys.coeffs.sigma * sys.coeffs.h2 * sys.coeffs.h3 * sys.coeffs.B_tilde *
                     sys.coeffs.B2 * Pux[sys.n()] +
                 sys.coeffs.B3 * ux[sys.n()]);
        }
        const double E = sys.energy(st);
        if (k == 0) E0 = E;
        push(tmid, E, E0, V, st);
        if (cfg.snapshot_stride > 0 && (k + 1) % cfg.snapshot_stride == 0)
            tr.snapshots.emplace_back(k + 1, st);
        y = ynew;
    }
    return tr;
}

inline SimulationTrace run_rk4(const SemiDiscreteSystem& sys, const BeamState& initial,
                               const IntegratorConfig& cfg, SimulationTrace tr) {
    const double a1 = time_scale(sys.coeffs);
    const int steps = static_cast<int>(std::ceil(cfg.t_end / cfg.dt - 1e-12));
    if (sys.mode != Mode::elliptic_constraint)
        throw ValidationError("rk4 is supported for the elliptic-constraint mode; the filtered "
                              "pencil needs the implicit scheme");
    const double h = cfg.dt * a1;
    const double rho = detail::estimate_spectral_radius(sys.Acl);
    tr.rk4_dt_bound = rho > 0.0 ? 2.8 / rho : 0.0;
    if (rho > 0.0 && h > tr.rk4_dt_bound)
        throw StabilityViolation("rk4 step " + std::to_string(h) +
                                 " exceeds the stability bound " + std::to_string(tr.rk4_dt_bound));
    Eigen::VectorXd z = sys.pack_constraint(initial);
    auto f = [&](const Eigen::VectorXd& zz) { return (sys.Acl * zz).eval(); };
    BeamState st = initial;
    double V = voltage_analytic(sys, st, sys.ctrl);
    st.phi2 = sys.solve_phi_constraint(st.w, V);
    const double E0 = sys.energy(st);
    tr.t_star.push_back(st.time);
    tr.t_real.push_back(st.time * a1);
    tr.energy.push_back(E0);
    tr.energy_normalized.push_back(1.0);
    tr.voltage.push_back(V);
    tr.w_tip.push_back(st.w[sys.n()]);
    tr.phi2_tip.push_back(st.phi2[sys.n()]);
    for (int k = 1; k <= steps; ++k) {
        Eigen::VectorXd k1 = f(z);
        Eigen::VectorXd k2 = f(z + 0.5 * h * k1);
        Eigen::VectorXd k3 = f(z + 0.5 * h * k2);
        Eigen::VectorXd k4 = f(z + h * k3);
        z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!z.allFinite()) throw NonConvergence("rk4 produced non-finite values");
        st = sys.unpack_constraint(z, initial.time + k * cfg.dt);
        V = voltage_analytic(sys, st, sys.ctrl);
        st.phi2 = sys.solve_phi_constraint(st.w, V);
        const double E = sys.energy(st);
        tr.t_star.push_back(st.time);
        tr.t_real.push_back(st.time * a1);
        tr.energy.push_back(E);
        tr.energy_normalized.push_back(E0 > 0 ? E / E0 : 0.0);
        tr.voltage.push_back(V);
        tr.w_tip.push_back(st.w[sys.n()]);
        tr.phi2_tip.push_back(st.phi2[sys.n()]);
        if (cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0)
            tr.snapshots.emplace_back(k, st);
    }
    return tr;
}

struct DecayFit {
    double omega = 0.0;      // E ~ M exp(-2 omega t)
    double log_amplitude = 0.0;
    double residual = 0.0;   // rms residual of the log-linear fit
};

/// Least-squares fit of log E(t) = log M - 2 omega t over [t0, t1] (t_star).
inline DecayFit fit_decay_rate(const SimulationTrace& tr, double t0, double t1) {
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < tr.t_star.size(); ++i) {
        if (tr.t_star[i] < t0 || tr.t_star[i] > t1) continue;
        if (!(tr.energy[i] > 0.0))
            throw NonPositiveEnergy("energy <= 0 inside the fit window");
        ts.push_back(tr.t_star[i]);
        ys.push_back(std::log(tr.energy[i]));
    }
    if (ts.size() < 3) throw WindowTooShort("need at least 3 samples in the fit window");
    const double nn = static_cast<double>(ts.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sy += ys[i];
        stt += ts[i] * ts[i];
        sty += ts[i] * ys[i];
    }
    const double det = nn * stt - st * st;
    if (std::abs(det) < 1e-300) throw WindowTooShort("degenerate fit window");
    const double slope = (nn * sty - st * sy) / det;
    const double icept = (sy * stt - st * sty) / det;
    DecayFit fit;
    fit.omega = -0.5 * slope;
    fit.log_amplitude = icept;
    double rss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = ys[i] - (icept + slope * ts[i]);
        rss += r * r;
    }
    fit.residual = std::sqrt(rss / nn);
    return fit;
}

} // namespace mmbeam
