#pragma once

// Experiment orchestration: resolve a configuration into a concrete spec,
// run one experiment kind, and write deterministic '#'-commented CSV files.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mmbeam/config_parser.hpp"
#include "mmbeam/model.hpp"
#include "mmbeam/spectral.hpp"
#include "mmbeam/time_march.hpp"

namespace mmbeam {

enum class ExperimentKind { simulate, spectrum, convergence, oracle_suite, sweep };

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::simulate;
    MaterialConstants material;
    CoefficientOverrides overrides;
    int n = 60;
    Mode mode = Mode::viscous_filtered;
    TipRow tip_row = TipRow::consistent;
    ControllerConfig ctrl{Law::discrete_sec4, 1.0e8, TraceMethod::p_sigma_direct};
    std::optional<double> kappa;      // default dx/5
    IntegratorConfig integrator{Scheme::implicit_midpoint, 1e-3, 0.0, 50, false};
    bool t_end_auto = true;           // t_end = t_end_real / A1
    double t_end_real = 5.0;
    InitialData initial = InitialData::gaussian;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::vector<double> sweep_gains{1e6, 1e7, 1e8};
    std::vector<int> sweep_ns{30, 60};

    void validate() const {
        if (n < 8) throw ValidationError("ResolutionTooSmall: n = " + std::to_string(n) +
                                         ", need n >= 8");
        ctrl.validate();
        if (!(integrator.dt > 0.0)) throw ValidationError("dt > 0 required");
        if (!t_end_auto && !(integrator.t_end > 0.0))
            throw ValidationError("t_end > 0 required");
        if (kappa && *kappa < 0.0) throw ValidationError("kappa >= 0 required");
    }
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline const char* mode_name(Mode m) {
    return m == Mode::viscous_filtered ? "viscous" : "constraint";
}
inline const char* law_name(Law l) {
    switch (l) {
        case Law::off: return "off";
        case Law::analytic_feed: return "analytic";
        case Law::discrete_sec4: return "sec4";
    }
    return "?";
}
inline const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::simulate: return "simulate";
        case ExperimentKind::spectrum: return "spectrum";
        case ExperimentKind::convergence: return "convergence";
        case ExperimentKind::oracle_suite: return "oracle-suite";
        case ExperimentKind::sweep: return "sweep";
    }
    return "?";
}

} // namespace detail

inline ExperimentSpec parse_config(const KeyValueConfig& cfg) {
    ExperimentSpec s;
    auto& m = s.material;
    m.L = cfg.get_double("material.L", m.L);
    m.h1 = cfg.get_double("material.h1", m.h1);
    m.h2 = cfg.get_double("material.h2", m.h2);
    m.h3 = cfg.get_double("material.h3", m.h3);
    m.rho1 = cfg.get_double("material.rho1", m.rho1);
    m.rho2 = cfg.get_double("material.rho2", m.rho2);
    m.rho3 = cfg.get_double("material.rho3", m.rho3);
    m.alpha1 = cfg.get_double("material.alpha1", m.alpha1);
    m.alpha2 = cfg.get_double("material.alpha2", m.alpha2);
    m.alpha3 = cfg.get_double("material.alpha3", m.alpha3);
    m.gamma = cfg.get_double("material.gamma", m.gamma);
    m.beta = cfg.get_double("material.beta", m.beta);
    m.G2 = cfg.get_double("material.G2", m.G2);

    auto opt = [&](const char* key) -> std::optional<double> {
        if (!cfg.has(key)) return std::nullopt;
        return cfg.get_double(key, 0.0);
    };
    s.overrides.m = opt("coefficients.m");
    s.overrides.A = opt("coefficients.A");
    s.overrides.B1 = opt("coefficients.B1");
    s.overrides.B2 = opt("coefficients.B2");
    s.overrides.B3 = opt("coefficients.B3");
    s.overrides.B4 = opt("coefficients.B4");
    s.overrides.C = opt("coefficients.C");
    s.overrides.sigma = opt("coefficients.sigma");

    s.n = cfg.get_int("grid.n", s.n);

    const std::string mode = cfg.get_string("simulation.mode", "viscous");
    if (mode == "viscous") s.mode = Mode::viscous_filtered;
    else if (mode == "constraint") s.mode = Mode::elliptic_constraint;
    else throw ValidationError("simulation.mode must be viscous|constraint");

    const std::string tip = cfg.get_string("simulation.tip_row", "consistent");
    if (tip == "consistent") s.tip_row = TipRow::consistent;
    else if (tip == "printed") s.tip_row = TipRow::printed;
    else throw ValidationError("simulation.tip_row must be consistent|printed");

    const std::string init = cfg.get_string("simulation.initial", "gaussian");
    if (init == "gaussian") s.initial = InitialData::gaussian;
    else if (init == "printed") s.initial = InitialData::printed;
    else throw ValidationError("simulation.initial must be gaussian|printed");

    s.seed = static_cast<std::uint64_t>(cfg.get_int("simulation.seed", 1));

    const std::string law = cfg.get_string("controller.law", "sec4");
    if (law == "sec4") s.ctrl.law = Law::discrete_sec4;
    else if (law == "analytic") s.ctrl.law = Law::analytic_feed;
    else if (law == "off") s.ctrl.law = Law::off;
    else throw ValidationError("controller.law must be sec4|analytic|off");
    s.ctrl.k1 = cfg.get_double("controller.k1", s.ctrl.k1);
    const std::string trace = cfg.get_string("controller.trace", "p_sigma");
    if (trace == "p_sigma") s.ctrl.trace = TraceMethod::p_sigma_direct;
    else if (trace == "phi") s.ctrl.trace = TraceMethod::phi_substitution;
    else throw ValidationError("controller.trace must be p_sigma|phi");

    if (cfg.has("scheme.kappa")) s.kappa = cfg.get_double("scheme.kappa", 0.0);

    const std::string scheme = cfg.get_string("integrator.scheme", "midpoint");
    if (scheme == "midpoint") s.integrator.scheme = Scheme::implicit_midpoint;
    else if (scheme == "rk4") s.integrator.scheme = Scheme::rk4;
    else throw ValidationError("integrator.scheme must be midpoint|rk4");
    s.integrator.dt = cfg.get_double("integrator.dt", s.integrator.dt);
    if (cfg.has("integrator.t_end")) {
        s.t_end_auto = false;
        s.integrator.t_end = cfg.get_double("integrator.t_end", 0.0);
    }
    s.t_end_real = cfg.get_double("integrator.t_end_real", s.t_end_real);
    s.integrator.snapshot_stride = cfg.get_int("integrator.snapshot_stride",
                                               s.integrator.snapshot_stride);

    s.out_dir = cfg.get_string("output.dir", s.out_dir);

    if (cfg.has("sweep.gains")) {
        s.sweep_gains.clear();
        std::istringstream ss(cfg.get_string("sweep.gains", ""));
        double v;
        while (ss >> v) s.sweep_gains.push_back(v);
    }
    if (cfg.has("sweep.ns")) {
        s.sweep_ns.clear();
        std::istringstream ss(cfg.get_string("sweep.ns", ""));
        int v;
        while (ss >> v) s.sweep_ns.push_back(v);
    }

    s.validate();
    return s;
}

inline ExperimentSpec parse_config_file(const std::string& path) {
    return parse_config(KeyValueConfig::from_file(path));
}

namespace detail {

inline void write_provenance(std::ofstream& out, const ExperimentSpec& s,
                             const BeamCoefficients& c, double a1) {
    out << "# mmbeam " << kind_name(s.kind) << "\n";
    out << "# n = " << s.n << "\n";
    out << "# mode = " << mode_name(s.mode) << "\n";
    out << "# tip_row = " << (s.tip_row == TipRow::consistent ? "consistent" : "printed") << "\n";
    out << "# law = " << law_name(s.ctrl.law) << "\n";
    out << "# k1 = " << fmt17(s.ctrl.k1) << "\n";
    out << "# kappa = " << fmt17(s.kappa.value_or(s.material.L / s.n / 5.0)) << "\n";
    out << "# dt = " << fmt17(s.integrator.dt) << "\n";
    out << "# t_end = " << fmt17(s.integrator.t_end) << "\n";
    out << "# seed = " << s.seed << "\n";
    out << "# initial = " << (s.initial == InitialData::gaussian ? "gaussian" : "printed") << "\n";
    out << "# m = " << fmt17(c.m) << "\n";
    out << "# A_tilde = " << fmt17(c.A_tilde) << "\n";
    out << "# B_tilde = " << fmt17(c.B_tilde) << "\n";
    out << "# C_tilde = " << fmt17(c.C_tilde) << "\n";
    out << "# sigma = " << fmt17(c.sigma) << "\n";
    out << "# B2 = " << fmt17(c.B2) << "\n";
    out << "# B3 = " << fmt17(c.B3) << "\n";
    out << "# B4 = " << fmt17(c.B4) << "\n";
    out << "# A1 = " << fmt17(a1) << "\n";
}

inline std::filesystem::path resolve_out_dir(const ExperimentSpec& s) {
    const char* env = std::getenv("MMBEAM_OUT");
    std::filesystem::path dir = env ? std::filesystem::path(env)
                                    : std::filesystem::path(s.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace detail

/// Resolve the spec into an assembled system (shared by the CLI paths).
inline SemiDiscreteSystem build_system(const ExperimentSpec& s, BeamCoefficients* out_coeffs =
                                                                    nullptr) {
    const BeamCoefficients coeffs = derive_coefficients(s.material, s.overrides);
    if (out_coeffs) *out_coeffs = coeffs;
    const Grid grid = build_grid(s.n, s.material.L);
    return assemble(grid, coeffs, s.mode, s.ctrl, s.kappa, s.tip_row);
}

inline int run_simulate(const ExperimentSpec& spec_in) {
    ExperimentSpec s = spec_in;
    BeamCoefficients coeffs;
    SemiDiscreteSystem sys = build_system(s, &coeffs);
    const double a1 = time_scale(coeffs);
    if (s.t_end_auto) s.integrator.t_end = s.t_end_real / a1;

    const BeamState init = make_initial_state(sys, s.initial);
    const SimulationTrace tr = run(sys, init, s.integrator);

    const auto dir = detail::resolve_out_dir(s);
    std::ofstream out(dir / "trace.csv");
    detail::write_provenance(out, s, coeffs, a1);
    out << "t_star,t_real,E,E_normalized,V,w_tip,phi2_tip\n";
    for (std::size_t i = 0; i < tr.t_star.size(); ++i) {
        out << detail::fmt17(tr.t_star[i]) << ',' << detail::fmt17(tr.t_real[i]) << ','
            << detail::fmt17(tr.energy[i]) << ',' << detail::fmt17(tr.energy_normalized[i]) << ','
            << detail::fmt17(tr.voltage[i]) << ',' << detail::fmt17(tr.w_tip[i]) << ','
            << detail::fmt17(tr.phi2_tip[i]) << "\n";
    }
    for (const auto& [stepno, st] : tr.snapshots) {
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_%06d.csv", stepno);
        std::ofstream snap(dir / name);
        detail::write_provenance(snap, s, coeffs, a1);
        snap << "x,w,phi2\n";
        for (int i = 0; i <= sys.n(); ++i)
            snap << detail::fmt17(sys.grid.node(i)) << ',' << detail::fmt17(st.w[i]) << ','
                 << detail::fmt17(st.phi2[i]) << "\n";
    }
    return 0;
}

inline int run_spectrum(const ExperimentSpec& spec_in) {
    ExperimentSpec s = spec_in;
    BeamCoefficients coeffs;
    SemiDiscreteSystem sys = build_system(s, &coeffs);
    const double a1 = time_scale(coeffs);
    const DiscreteGenerator gen = assemble_generator(sys);
    const auto spec = spectrum(gen);
    const auto dir = detail::resolve_out_dir(s);
    std::ofstream out(dir / "spectrum.csv");
    detail::write_provenance(out, s, coeffs, a1);
    out << "# abscissa = " << detail::fmt17(spectral_abscissa(spec)) << "\n";
    out << "# min_modulus = " << detail::fmt17(min_modulus(spec)) << "\n";
    out << "re,im\n";
    for (const auto& l : spec)
        out << detail::fmt17(l.real()) << ',' << detail::fmt17(l.imag()) << "\n";
    return 0;
}

inline int run_convergence(const ExperimentSpec& spec_in) {
    ExperimentSpec s = spec_in;
    const BeamCoefficients coeffs = derive_coefficients(s.material, s.overrides);
    const double a1 = time_scale(coeffs);
    // manufactured smoothing-operator solution on a moderate kernel parameter
    const double sC = 25.0;
    const auto dir = detail::resolve_out_dir(s);
    std::ofstream out(dir / "convergence.csv");
    detail::write_provenance(out, s, coeffs, a1);
    out << "n,error,observed_order\n";
    double prev_err = 0.0;
    for (int k = 0; k < 4; ++k) {
        const int n = 25 * (1 << k);
        const Grid g = build_grid(n, s.material.L);
        SigmaOperator sig(g, sC);
        Eigen::VectorXd f(n + 1), exact(n + 1);
        const double pi = 3.14159265358979323846;
        for (int i = 0; i <= n; ++i) {
            const double x = g.node(i);
            exact[i] = 1.0 + std::cos(pi * x / g.length);
            f[i] = sC * exact[i] + (pi / g.length) * (pi / g.length) * std::cos(pi * x / g.length);
        }
        const Eigen::VectorXd sol = sig.apply_solve(f);
        const double err = std::sqrt((sol - exact).squaredNorm() / exact.squaredNorm());
        const double order = (k == 0) ? 0.0 : std::log2(prev_err / err);
        out << n << ',' << detail::fmt17(err) << ',' << detail::fmt17(order) << "\n";
        prev_err = err;
    }
    return 0;
}

inline int run_oracle_suite(const ExperimentSpec& spec_in, std::string* summary = nullptr) {
    ExperimentSpec s = spec_in;
    const BeamCoefficients coeffs = derive_coefficients(s.material, s.overrides);
    const double a1 = time_scale(coeffs);
    const auto dir = detail::resolve_out_dir(s);
    std::ofstream out(dir / "oracle_report.txt");
    detail::write_provenance(out, s, coeffs, a1);

    std::mt19937_64 rng(s.seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    bool all_pass = true;
    auto report = [&](const char* name, bool ok, double value) {
        out << (ok ? "PASS" : "FAIL") << ' ' << name << " value = " << detail::fmt17(value)
            << "\n";
        if (summary) *summary += std::string(ok ? "PASS " : "FAIL ") + name + "\n";
        all_pass = all_pass && ok;
    };

    const double sC = 25.0;
    // kernel-vs-solve agreement and refinement slope
    std::vector<double> errs;
    for (int n : {50, 100, 200}) {
        const Grid g = build_grid(n, s.material.L);
        SigmaOperator sig(g, sC);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd f(n + 1);
            const double a = dist(rng), b = dist(rng), c = dist(rng);
            const double pi = 3.14159265358979323846;
            for (int i = 0; i <= n; ++i) {
                const double x = g.node(i) / g.length;
                f[i] = a * std::sin(2.0 * pi * x) + b * std::cos(pi * x) + c * x * (1.0 - x);
            }
            const Eigen::VectorXd s1 = sig.apply_solve(f);
            const Eigen::VectorXd s2 = sig.apply_kernel(f);
            worst = std::max(worst, std::sqrt((s1 - s2).squaredNorm() / s1.squaredNorm()));
        }
        errs.push_back(worst);
    }
    report("kernel_vs_solve_rel_err_n200", errs[2] <= 1e-3, errs[2]);
    const double slope = 0.5 * (std::log2(errs[0] / errs[1]) + std::log2(errs[1] / errs[2]));
    report("kernel_vs_solve_order", std::abs(slope - 2.0) <= 0.3, slope);

    // symmetry / sign properties in the weighted inner product
    {
        const int n = 120;
        const Grid g = build_grid(n, s.material.L);
        SigmaOperator sig(g, sC);
        const Eigen::VectorXd w = sig.quadrature_weights();
        double sym = 0.0, pneg = 0.0, jpos = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd u(n + 1), v(n + 1);
            for (int i = 0; i <= n; ++i) { u[i] = dist(rng); v[i] = dist(rng); }
            const Eigen::VectorXd Pu = sig.apply_solve(u), Pv = sig.apply_solve(v);
            const double s1 = Pu.cwiseProduct(w).dot(v), s2 = u.cwiseProduct(w).dot(Pv);
            sym = std::max(sym, std::abs(s1 - s2) /
                                    (std::sqrt(u.cwiseProduct(w).dot(u)) *
                                     std::sqrt(v.cwiseProduct(w).dot(v))));
            const double uu = u.cwiseProduct(w).dot(u);
            pneg = std::min(pneg, Pu.cwiseProduct(w).dot(u) / uu);
            const Eigen::VectorXd Ju = sig.apply_J(u);
            jpos = std::max(jpos, Ju.cwiseProduct(w).dot(u) / uu);
        }
        report("P_symmetry", sym <= 1e-10, sym);
        report("P_nonnegative", pneg >= -1e-12, pneg);
        report("J_nonpositive", jpos <= 1e-12, jpos);
    }
    out << (all_pass ? "ALL PASS\n" : "FAILURES PRESENT\n");
    return all_pass ? 0 : 1;
}

inline int run_sweep(const ExperimentSpec& spec_in) {
    ExperimentSpec s = spec_in;
    BeamCoefficients coeffs = derive_coefficients(s.material, s.overrides);
    const double a1 = time_scale(coeffs);
    const auto dir = detail::resolve_out_dir(s);
    std::ofstream out(dir / "sweep.csv");
    detail::write_provenance(out, s, coeffs, a1);
    out << "gain,n,omega,abscissa\n";
    for (int n : s.sweep_ns) {
        for (double gain : s.sweep_gains) {
            ExperimentSpec cell = s;
            cell.n = n;
            cell.ctrl.k1 = gain;
            SemiDiscreteSystem sys = build_system(cell);
            if (cell.t_end_auto) cell.integrator.t_end = cell.t_end_real / a1;
            const BeamState init = make_initial_state(sys, cell.initial);
            const SimulationTrace tr = run(sys, init, cell.integrator);
            double omega = 0.0;
            try {
                omega = fit_decay_rate(tr, 1.0, cell.integrator.t_end).omega;
            } catch (const Error&) {
                omega = std::numeric_limits<double>::quiet_NaN();
            }
            // abscissa reported on the nondimensional clock, matching omega
            double absc = spectral_abscissa(assemble_generator(sys));
            if (cell.mode == Mode::elliptic_constraint) absc *= a1;
            out << detail::fmt17(gain) << ',' << n << ',' << detail::fmt17(omega) << ','
                << detail::fmt17(absc) << "\n";
        }
    }
    return 0;
}

inline int run_experiment(const ExperimentSpec& s) {
    switch (s.kind) {
        case ExperimentKind::simulate: return run_simulate(s);
        case ExperimentKind::spectrum: return run_spectrum(s);
        case ExperimentKind::convergence: return run_convergence(s);
        case ExperimentKind::oracle_suite: return run_oracle_suite(s);
        case ExperimentKind::sweep: return run_sweep(s);
    }
    return 2;
}

} // namespace mmbeam
