#pragma once

// Thomas solve for general (non-symmetric) tridiagonal systems.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "mmbeam/errors.hpp"

namespace mmbeam::detail {

/// Tridiagonal matrix with rows (lower[i], diag[i], upper[i]).
struct Tridiagonal {
    Eigen::VectorXd lower, diag, upper;  // lower[0] and upper[n-1] unused

    explicit Tridiagonal(int n)
        : lower(Eigen::VectorXd::Zero(n)),
          diag(Eigen::VectorXd::Zero(n)),
          upper(Eigen::VectorXd::Zero(n)) {}

    int size() const { return static_cast<int>(diag.size()); }

    Tridiagonal transposed() const {
        Tridiagonal t(size());
        t.diag = diag;
        for (int i = 0; i + 1 < size(); ++i) {
            t.upper[i] = lower[i + 1];
            t.lower[i + 1] = upper[i];
        }
        return t;
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        const int n = size();
        Eigen::VectorXd c(n), d(n);
        double den = diag[0];
        if (std::abs(den) < 1e-300) throw SolverSingular("tridiagonal pivot ~ 0 at row 0");
        c[0] = upper[0] / den;
        d[0] = rhs[0] / den;
        for (int i = 1; i < n; ++i) {
            den = diag[i] - lower[i] * c[i - 1];
            if (std::abs(den) < 1e-300)
                throw SolverSingular("tridiagonal pivot ~ 0 at row " + std::to_string(i));
            c[i] = upper[i] / den;
            d[i] = (rhs[i] - lower[i] * d[i - 1]) / den;
        }
        Eigen::VectorXd x(n);
        x[n - 1] = d[n - 1];
        for (int i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
        return x;
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        const int n = size();
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += lower[i] * x[i - 1];
            if (i + 1 < n) s += upper[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }
};

} // namespace mmbeam::detail
