#pragma once

// Min-norm projection of a reference input onto {u : a.u >= b} intersected
// with a box:
//
//   minimize 1/2 |u - u_ref|^2   s.t.  a.u >= b,  lo <= u <= hi.
//
// For a box the KKT point is u(lambda) = clamp(u_ref + lambda a) with
// lambda >= 0, and a.u(lambda) is piecewise linear and nondecreasing in
// lambda, so the active multiplier is found exactly by walking breakpoints.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "bblr/dynamics.hpp"
#include "bblr/error.hpp"

namespace bblr {

struct InputBox {
    Vec lo;
    Vec hi;

    InputBox() = default;
    InputBox(Vec l, Vec h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo.size() != hi.size()) throw InvalidArgument("InputBox: bound dimension mismatch");
        if ((lo.array() >= hi.array()).any()) throw InvalidArgument("InputBox: need lo < hi in every channel");
    }

    static InputBox symmetric(int m, double bound) { return {Vec::Constant(m, -bound), Vec::Constant(m, bound)}; }

    [[nodiscard]] int dim() const { return static_cast<int>(lo.size()); }
    [[nodiscard]] Vec clamp(const Vec& u) const { return u.cwiseMax(lo).cwiseMin(hi); }
    [[nodiscard]] bool contains(const Vec& u, double tol = 0.0) const {
        return ((u.array() >= lo.array() - tol) && (u.array() <= hi.array() + tol)).all();
    }
    [[nodiscard]] double sup_norm() const { return std::max(lo.cwiseAbs().maxCoeff(), hi.cwiseAbs().maxCoeff()); }

    // Box point maximizing a.u; channels with a_i = 0 take the clamped hint.
    [[nodiscard]] Vec argmax_linear(const Eigen::RowVectorXd& a, const Vec& hint) const {
        Vec u = clamp(hint);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (a(i) > 0.0) u(i) = hi(i);
            if (a(i) < 0.0) u(i) = lo(i);
        }
        return u;
    }
};

struct QpResult {
    Vec u;
    bool feasible = true;
    double multiplier = 0.0;  // of the halfspace constraint
};

namespace detail {

inline QpResult solve_scalar_qp(double u_ref, double a, double b, double lo, double hi) {
    double lower = lo;
    double upper = hi;
    if (a > 0.0)
        lower = std::max(lower, b / a);
    else if (a < 0.0)
        upper = std::min(upper, b / a);
    else if (b > 0.0)
        return {Vec::Constant(1, std::clamp(u_ref, lo, hi)), false, 0.0};

    if (lower > upper) return {Vec::Constant(1, a > 0.0 ? hi : lo), false, 0.0};

    const double u = std::clamp(u_ref, lower, upper);
    const double box_u = std::clamp(u_ref, lo, hi);
    const double lambda = (u != box_u && a != 0.0) ? (u - u_ref) / a : 0.0;
    return {Vec::Constant(1, u), true, std::max(lambda, 0.0)};
}

}  // namespace detail

inline QpResult solve_min_norm_qp(const Vec& u_ref, const Eigen::RowVectorXd& a, double b, const InputBox& box) {
    const auto m = u_ref.size();
    if (a.size() != m || box.dim() != m) throw InvalidArgument("solve_min_norm_qp: dimension mismatch");
    if (m == 1) return detail::solve_scalar_qp(u_ref(0), a(0), b, box.lo(0), box.hi(0));

    auto u_of = [&](double lambda) -> Vec { return box.clamp(u_ref + lambda * a.transpose()); };
    auto g_of = [&](double lambda) { return a.dot(u_of(lambda).transpose()); };

    const Vec u0 = u_of(0.0);
    if (g_of(0.0) >= b) return {u0, true, 0.0};

    const Vec best = box.argmax_linear(a, u_ref);
    if (a.dot(best.transpose()) < b) return {best, false, 0.0};

    // Breakpoints where some channel enters or leaves a bound.
    std::vector<double> breaks{0.0};
    for (Eigen::Index i = 0; i < m; ++i) {
        if (a(i) == 0.0) continue;
        for (double bound : {box.lo(i), box.hi(i)}) {
            const double lam = (bound - u_ref(i)) / a(i);
            if (lam > 0.0) breaks.push_back(lam);
        }
    }
    std::sort(breaks.begin(), breaks.end());

    double lam_lo = 0.0;
    double g_lo = g_of(0.0);
    for (double lam_hi : breaks) {
        if (lam_hi <= lam_lo) continue;
        const double g_hi = g_of(lam_hi);
        if (g_hi >= b) {
            // g is affine on [lam_lo, lam_hi].
            const double lam = g_hi > g_lo ? lam_lo + (b - g_lo) * (lam_hi - lam_lo) / (g_hi - g_lo) : lam_hi;
            return {u_of(lam), true, lam};
        }
        lam_lo = lam_hi;
        g_lo = g_hi;
    }
    // Numerically at the last breakpoint; max over the box equals b.
    return {u_of(lam_lo), true, lam_lo};
}

struct DykstraOptions {
    double tolerance = 1e-9;
    int max_sweeps = 1000;
};

// Dykstra alternating projections onto the halfspace and the box. Slower
// than solve_min_norm_qp but structurally independent of it.
inline QpResult dykstra_min_norm_qp(const Vec& u_ref, const Eigen::RowVectorXd& a, double b, const InputBox& box,
                                    DykstraOptions opts = {}) {
    const Vec best = box.argmax_linear(a, u_ref);
    if (a.dot(best.transpose()) < b) return {best, false, 0.0};
    const double a2 = a.squaredNorm();

    auto project_half = [&](const Vec& v) -> Vec {
        const double viol = b - a.dot(v.transpose());
        if (viol <= 0.0 || a2 == 0.0) return v;
        return v + (viol / a2) * a.transpose();
    };

    Vec x = u_ref;
    Vec p = Vec::Zero(u_ref.size());
    Vec q = Vec::Zero(u_ref.size());
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        const Vec y = box.clamp(x + p);
        p = x + p - y;
        const Vec x_next = project_half(y + q);
        q = y + q - x_next;
        // x alone can stall for a sweep while the increments still move, so
        // also require the two projections to agree.
        const double change = std::max((x_next - x).norm(), (x_next - y).norm());
        x = x_next;
        if (change <= opts.tolerance) break;
    }
    x = box.clamp(x);
    const double slack = a.dot(x.transpose()) - b;
    const double lam = a2 > 0.0 && slack <= opts.tolerance ? std::max(0.0, a.dot((x - u_ref).transpose()) / a2) : 0.0;
    return {x, true, lam};
}

// Largest violation among primal feasibility, dual sign, complementary
// slackness and stationarity (with box multipliers absorbing the rest).
inline double kkt_residual(const Vec& u_ref, const Eigen::RowVectorXd& a, double b, const InputBox& box,
                           const QpResult& res) {
    const Vec& u = res.u;
    const double lam = res.multiplier;
    const double slack = a.dot(u.transpose()) - b;
    double worst = std::max(0.0, -slack);
    worst = std::max(worst, std::max(0.0, -lam));
    worst = std::max(worst, std::abs(lam * slack));
    constexpr double kAtBound = 1e-12;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        worst = std::max({worst, box.lo(i) - u(i), u(i) - box.hi(i)});
        const double r = u(i) - u_ref(i) - lam * a(i);
        const bool at_lo = u(i) <= box.lo(i) + kAtBound;
        const bool at_hi = u(i) >= box.hi(i) - kAtBound;
        if (at_lo && !at_hi)
            worst = std::max(worst, -r);
        else if (at_hi && !at_lo)
            worst = std::max(worst, r);
        else if (!at_lo && !at_hi)
            worst = std::max(worst, std::abs(r));
    }
    return worst;
}

}  // namespace bblr
