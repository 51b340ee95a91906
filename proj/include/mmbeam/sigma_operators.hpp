#pragma once

// The compact smoothing operator P = (sigma*C_tilde I - D_x^2)^{-1} on the
// Neumann domain (psi_x(0) = psi_x(L) = 0) and the derived operator
// J = sigma*C_tilde P - I. P is implemented two independent ways:
//  - apply_solve: tridiagonal solve of the discrete operator (production path)
//  - apply_kernel: trapezoid quadrature of the closed-form Green's kernel
//    (oracle path)
// The two agree to O(dx^2) on smooth data; tests exploit that.

#include <cmath>

#include <Eigen/Dense>

#include "mmbeam/errors.hpp"
#include "mmbeam/grid.hpp"
#include "mmbeam/tridiag.hpp"

namespace mmbeam {

class SigmaOperator {
public:
    /// c = sigma * C_tilde > 0; fields live on nodes x_0..x_n.
    SigmaOperator(const Grid& grid, double c) : grid_(grid), c_(c), op_(grid.n + 1) {
        if (!(c > 0.0)) throw SolverSingular("sigma*C_tilde <= 0");
        const int n = grid_.n;
        const double idx2 = 1.0 / (grid_.dx * grid_.dx);
        // (c I - Lap) with mirror ghost elimination: s_{-1} = s_1, s_{n+1} = s_{n-1}
        op_.diag[0] = c + 2.0 * idx2;
        op_.upper[0] = -2.0 * idx2;
        for (int i = 1; i < n; ++i) {
            op_.lower[i] = -idx2;
            op_.diag[i] = c + 2.0 * idx2;
            op_.upper[i] = -idx2;
        }
        op_.lower[n] = -2.0 * idx2;
        op_.diag[n] = c + 2.0 * idx2;
    }

    double parameter() const { return c_; }
    const Grid& grid() const { return grid_; }

    /// Reference implementation: solve (c I - D^2_h) s = f.
    Eigen::VectorXd apply_solve(const Eigen::VectorXd& f) const {
        return op_.solve(f);
    }

    /// Transpose solve, used to form trace functionals e_L^T P.
    Eigen::VectorXd apply_solve_transpose(const Eigen::VectorXd& f) const {
        return op_.transposed().solve(f);
    }

    /// Residual helper for tests: (c I - D^2_h) s.
    Eigen::VectorXd apply_forward(const Eigen::VectorXd& s) const {
        return op_.apply(s);
    }

    /// Closed-form kernel of P on the Neumann domain:
    ///   g(x,z) = cosh(k x_<) cosh(k (L - x_>)) / (k sinh(k L)),  k = sqrt(c).
    /// Evaluated in exponential form so large k L cannot overflow.
    double kernel(double x, double z) const {
        const double k = std::sqrt(c_);
        const double xl = std::min(x, z), xg = std::max(x, z);
        const double a = k * xl, b = k * (grid_.length - xg), c = k * grid_.length;
        const double num = (1.0 + std::exp(-2.0 * a)) * (1.0 + std::exp(-2.0 * b));
        const double den = 2.0 * (1.0 - std::exp(-2.0 * c));
        return std::exp(a + b - c) * num / den / k;
    }

    /// Oracle implementation: composite-trapezoid quadrature of the kernel.
    Eigen::VectorXd apply_kernel(const Eigen::VectorXd& f) const {
        const int n = grid_.n;
        Eigen::VectorXd out(n + 1);
        const Eigen::VectorXd w = quadrature_weights();
        for (int i = 0; i <= n; ++i) {
            double s = 0.0;
            for (int j = 0; j <= n; ++j)
                s += w[j] * kernel(grid_.node(i), grid_.node(j)) * f[j];
            out[i] = s;
        }
        return out;
    }

    /// J f = c * (P f) - f, with P the solve path.
    Eigen::VectorXd apply_J(const Eigen::VectorXd& f) const {
        return c_ * apply_solve(f) - f;
    }

    /// Trapezoid weights of the node set (also the discrete L^2 weight).
    Eigen::VectorXd quadrature_weights() const {
        const int n = grid_.n;
        Eigen::VectorXd w = Eigen::VectorXd::Constant(n + 1, grid_.dx);
        w[0] *= 0.5;
        w[n] *= 0.5;
        return w;
    }

private:
    Grid grid_;
    double c_;
    detail::Tridiagonal op_;
};

} // namespace mmbeam
