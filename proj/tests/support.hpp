#pragma once

// Oracles shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <limits>
#include <random>
#include <vector>

#include "bblr/classk.hpp"
#include "bblr/qp.hpp"

namespace bblr::oracle {

// Random nonnegative composition of the class-K constructors, up to the
// given nesting depth.
inline ClassKFn random_classk(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 4 : 1);
    std::uniform_real_distribution<double> coeff(0.05, 3.0);
    std::uniform_int_distribution<int> degree(1, 5);
    std::uniform_real_distribution<double> rho(0.05, 2.0);
    switch (pick(rng)) {
        case 0: return ClassKFn::linear(coeff(rng));
        case 1: return ClassKFn::signed_power(degree(rng), coeff(rng));
        case 2: return add(random_classk(rng, depth - 1), random_classk(rng, depth - 1));
        case 3: return scale(random_classk(rng, depth - 1), coeff(rng));
        default: return make_pssf(random_classk(rng, depth - 1), rho(rng));
    }
}

inline double qp_objective(const Vec& u, const Vec& u_ref) { return 0.5 * (u - u_ref).squaredNorm(); }

// Minimum objective over a regular grid of the box (feasible points only).
// Always an upper bound on the true minimum; +inf when no grid point is
// feasible.
inline double grid_min_qp(const Vec& u_ref, const Eigen::RowVectorXd& a, double b, const InputBox& box) {
    const int m = static_cast<int>(u_ref.size());
    const int n = m == 2 ? 401 : 81;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    Vec u(m);
    while (true) {
        for (int d = 0; d < m; ++d) u(d) = box.lo(d) + (box.hi(d) - box.lo(d)) * idx[static_cast<std::size_t>(d)] / (n - 1);
        if (a.dot(u.transpose()) >= b) best = std::min(best, qp_objective(u, u_ref));
        int d = 0;
        for (; d < m; ++d) {
            if (++idx[static_cast<std::size_t>(d)] < n) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
        if (d == m) return best;
    }
}

// Exhaustive search over active sets: each channel pinned to lo, pinned to
// hi or free, and the halfspace active or not. Each choice has a closed-form
// stationary point; the best feasible one is the global minimizer.
inline double enumerate_qp(const Vec& u_ref, const Eigen::RowVectorXd& a, double b, const InputBox& box) {
    const int m = static_cast<int>(u_ref.size());
    constexpr double kFeas = 1e-12;
    int combos = 1;
    for (int i = 0; i < m; ++i) combos *= 3;
    double best = std::numeric_limits<double>::infinity();
    for (int code = 0; code < combos; ++code) {
        std::vector<int> state(static_cast<std::size_t>(m));
        for (int i = 0, c = code; i < m; ++i, c /= 3) state[static_cast<std::size_t>(i)] = c % 3;
        for (bool active : {false, true}) {
            Vec u = u_ref;
            double free_norm2 = 0.0;
            for (int i = 0; i < m; ++i) {
                const int st = state[static_cast<std::size_t>(i)];
                if (st == 1) u(i) = box.lo(i);
                if (st == 2) u(i) = box.hi(i);
                if (st == 0) free_norm2 += a(i) * a(i);
            }
            if (active) {
                if (free_norm2 == 0.0) continue;
                const double lambda = (b - a.dot(u.transpose())) / free_norm2;
                for (int i = 0; i < m; ++i)
                    if (state[static_cast<std::size_t>(i)] == 0) u(i) += lambda * a(i);
            }
            if (!box.contains(u, kFeas) || a.dot(u.transpose()) < b - kFeas) continue;
            best = std::min(best, qp_objective(u, u_ref));
        }
    }
    return best;
}

}  // namespace bblr::oracle
