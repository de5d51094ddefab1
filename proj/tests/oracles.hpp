#pragma once

// Independent reference implementations used only to check the production
// code. None of these share code with the library's solvers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace oracle {

/// Mean Euclidean distance to the k nearest other points; a brute-force
/// outlier ranking reference.
inline std::vector<double> mean_knn_distance(const std::vector<std::vector<double>>& points,
                                             std::size_t k) {
    const std::size_t n = points.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> dists;
        dists.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t d = 0; d < points[i].size(); ++d) {
                const double dd = points[i][d] - points[j][d];
                d2 += dd * dd;
            }
            dists.push_back(std::sqrt(d2));
        }
        const std::size_t kk = std::min(k, dists.size());
        std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(kk),
                          dists.end());
        double s = 0.0;
        for (std::size_t j = 0; j < kk; ++j) s += dists[j];
        out[i] = s / static_cast<double>(kk);
    }
    return out;
}

/// Euclidean projection onto { 0 <= x <= cap, sum x = 1 } by bisection on
/// the simplex shift.
inline std::vector<double> project_capped_simplex(std::vector<double> v, double cap) {
    double lo = -1.0, hi = 1.0;
    for (double x : v) {
        lo = std::min(lo, x - cap - 1.0);
        hi = std::max(hi, x + 1.0);
    }
    auto mass = [&](double t) {
        double s = 0.0;
        for (double x : v) s += std::clamp(x - t, 0.0, cap);
        return s;
    };
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mass(mid) > 1.0)
            lo = mid;
        else
            hi = mid;
    }
    const double t = 0.5 * (lo + hi);
    for (double& x : v) x = std::clamp(x - t, 0.0, cap);
    return v;
}

struct DualSolution {
    std::vector<double> alpha;
    double rho = 0.0;
    double objective = 0.0;
};

/// High-precision projected-gradient solve of
///   min 1/2 a^T K a  s.t.  0 <= a_i <= cap, sum a = 1.
/// K is row-major l x l. Slow and simple on purpose.
inline DualSolution solve_ocsvm_dual_pg(const std::vector<double>& K, std::size_t l, double cap,
                                        std::size_t iterations = 400000) {
    // Step from the Gershgorin bound on the largest eigenvalue.
    double max_row_sum = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < l; ++j) s += std::abs(K[i * l + j]);
        max_row_sum = std::max(max_row_sum, s);
    }
    const double step = 1.0 / max_row_sum;

    std::vector<double> a(l, 1.0 / static_cast<double>(l));
    std::vector<double> g(l), next(l);
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < l; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < l; ++j) s += K[i * l + j] * a[j];
            g[i] = s;
        }
        for (std::size_t i = 0; i < l; ++i) next[i] = a[i] - step * g[i];
        next = project_capped_simplex(std::move(next), cap);
        double delta = 0.0;
        for (std::size_t i = 0; i < l; ++i) delta = std::max(delta, std::abs(next[i] - a[i]));
        a.swap(next);
        if (delta < 1e-14 && it > 100) break;
    }

    DualSolution sol;
    for (std::size_t i = 0; i < l; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < l; ++j) s += K[i * l + j] * a[j];
        g[i] = s;
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < l; ++i) obj += a[i] * g[i];
    sol.objective = 0.5 * obj;

    // rho convention: mean gradient over strictly interior alphas, else the
    // midpoint of the KKT interval from the bound alphas.
    double margin_sum = 0.0;
    std::size_t margin_n = 0;
    double lb = -1e300, ub = 1e300;
    const double tol = 1e-8 * cap;
    for (std::size_t i = 0; i < l; ++i) {
        if (a[i] > tol && a[i] < cap - tol) {
            margin_sum += g[i];
            ++margin_n;
        } else if (a[i] >= cap - tol) {
            lb = std::max(lb, g[i]);
        } else {
            ub = std::min(ub, g[i]);
        }
    }
    if (margin_n > 0)
        sol.rho = margin_sum / static_cast<double>(margin_n);
    else if (lb > -1e299 && ub < 1e299)
        sol.rho = 0.5 * (lb + ub);
    else
        sol.rho = lb > -1e299 ? lb : ub;
    sol.alpha = std::move(a);
    return sol;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> symmetric_eigenvalues(std::vector<double> m, std::size_t n) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += m[p * n + q] * m[p * n + q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = m[p * n + p];
                const double aqq = m[q * n + q];
                const double theta = 0.5 * (aqq - app) / apq;
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m[k * n + p];
                    const double mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m[p * n + k];
                    const double mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = m[i * n + i];
    std::sort(eig.begin(), eig.end());
    return eig;
}

}  // namespace oracle
