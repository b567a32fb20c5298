#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace saddlelab::analytic {

// Composite trapezoid on a grid of step min(0.01, (b-a)/1000), halved until the
// Richardson (Romberg) estimates agree to rel_tol.
namespace detail {

// Neumaier-compensated running sum; long trapezoid grids otherwise lose digits to round-off.
struct CompensatedSum {
    double sum = 0.0, c = 0.0;
    void add(double v) {
        double t = sum + v;
        c += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + c; }
};

}  // namespace detail

template <class F>
double integrate(F&& f, double a, double b, double rel_tol) {
    if (!(b >= a) || !std::isfinite(a) || !std::isfinite(b))
        throw Error(ErrorKind::QuadratureError, "integration bounds must be finite with b >= a");
    if (b == a) return 0.0;
    const double len = b - a;
    const double h0 = std::min(0.01, len / 1000.0);
    long n = static_cast<long>(std::ceil(len / h0));
    double h = len / static_cast<double>(n);
    detail::CompensatedSum sum;
    sum.add(0.5 * (f(a) + f(b)));
    for (long i = 1; i < n; ++i) sum.add(f(a + static_cast<double>(i) * h));
    std::vector<double> prev{sum.value() * h};
    constexpr int kMaxLevels = 7;
    for (int level = 1; level <= kMaxLevels; ++level) {
        for (long i = 0; i < n; ++i) sum.add(f(a + (static_cast<double>(i) + 0.5) * h));
        n *= 2;
        h *= 0.5;
        std::vector<double> cur{sum.value() * h};
        double p4 = 1.0;
        for (int j = 1; j <= level; ++j) {
            p4 *= 4.0;
            cur.push_back(cur[j - 1] + (cur[j - 1] - prev[j - 1]) / (p4 - 1.0));
        }
        double err = std::abs(cur.back() - prev.back());
        double scale = std::max(std::abs(cur.back()), 1e-300);
        if (err <= rel_tol * scale || err == 0.0) return cur.back();
        prev.swap(cur);
    }
    throw Error(ErrorKind::QuadratureError, "trapezoid/Richardson estimate did not reach tolerance");
}

}  // namespace saddlelab::analytic
