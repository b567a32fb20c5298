#pragma once

#include "saddlelab/core.hpp"

#include <doctest.h>

#include <cmath>
#include <optional>

namespace testing {

// Kind of the saddlelab::Error raised by f, or nullopt when nothing is thrown.
template <class F>
std::optional<saddlelab::ErrorKind> error_kind(F&& f) {
    try {
        f();
    } catch (const saddlelab::Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline saddlelab::Vec vec(std::initializer_list<double> v) {
    saddlelab::Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace testing
