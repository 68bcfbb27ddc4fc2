#pragma once

// Helpers shared by the unit tests: finite differences, random interior
// points and small synthetic datasets.

#include "betaar/bar_model.hpp"
#include "betaar/pipeline.hpp"
#include "betaar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace betaar::testing {

inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6)
{
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& g, const Vector& x, double h = 1e-6)
{
    Matrix J(x.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        J.col(i) = (g(xp) - g(xm)) / (2.0 * h);
    }
    return J;
}

inline double fd_derivative(const std::function<double(double)>& f, double x, double h = 1e-5)
{
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// max_i |a_i - b_i| / max(1, |b_i|)
inline double rel_err(const Matrix& a, const Matrix& b)
{
    return ((a - b).array().abs() / b.array().abs().max(1.0)).maxCoeff();
}

/// Uniform point of Delta_{k+1} kept at least `margin` away from its boundary.
inline Vector interior_point(int k, Rng& rng, double margin = 0.02)
{
    for (;;) {
        Vector e(k + 2);
        for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = -std::log(rng.uniform());
        const Vector a = e.head(k + 1) / e.sum();
        if (a.minCoeff() > margin && 1.0 - a.sum() > margin) return a;
    }
}

inline SeriesData bar_data(const Vector& alpha, double phi, int n, int k_max, std::uint64_t seed)
{
    Rng rng(seed);
    return SeriesData(synthetic_series(BarParams(alpha, phi), n, rng), k_max);
}

inline Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

} // namespace betaar::testing
