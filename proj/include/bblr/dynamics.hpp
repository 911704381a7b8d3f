#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bblr/error.hpp"

namespace bblr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Axis-aligned box in state space.
struct Box {
    Vec lo;
    Vec hi;

    [[nodiscard]] bool contains(const Vec& x) const {
        if (x.size() != lo.size()) return false;
        return ((x.array() >= lo.array()) && (x.array() <= hi.array())).all();
    }
};

// x' = f(x) + g(x) u
struct ControlAffineSystem {
    int state_dim = 0;
    int input_dim = 0;
    std::function<Vec(const Vec&)> drift;
    std::function<Mat(const Vec&)> input_matrix;

    [[nodiscard]] Vec f(const Vec& x) const { return drift(x); }
    [[nodiscard]] Mat g(const Vec& x) const { return input_matrix(x); }

    [[nodiscard]] Vec rhs(const Vec& x, const Vec& u) const { return drift(x) + input_matrix(x) * u; }
};

struct BarrierFunction {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    double h_max = 1.0;
    Box domain;

    [[nodiscard]] double operator()(const Vec& x) const { return value(x); }
    [[nodiscard]] Vec grad(const Vec& x) const { return gradient(x); }
    [[nodiscard]] bool in_safe_set(const Vec& x) const { return value(x) >= 0.0; }
};

struct LieDerivatives {
    double lf = 0.0;
    Eigen::RowVectorXd lg;

    // Full Lie derivative along f + g u.
    [[nodiscard]] double along(const Vec& u) const { return lf + lg.dot(u.transpose()); }
};

inline LieDerivatives lie_derivatives(const ControlAffineSystem& sys, const BarrierFunction& bf, const Vec& x) {
    if (!bf.domain.contains(x)) throw DomainError("lie_derivatives: state outside the evaluation domain");
    const Vec grad = bf.grad(x);
    LieDerivatives out;
    out.lf = grad.dot(sys.f(x));
    out.lg = grad.transpose() * sys.g(x);
    return out;
}

struct PendulumParams {
    double length = 1.0;
    double mass = 1.0;
    double gravity = 9.81;
};

// theta measured from the downward rest position:
//   theta'' = -(g/l) sin(theta) + u / (m l^2)
inline ControlAffineSystem pendulum_system(PendulumParams p) {
    if (!(p.length > 0.0) || !(p.mass > 0.0)) throw InvalidArgument("pendulum_system: length and mass must be positive");
    const double g_over_l = p.gravity / p.length;
    const double inv_inertia = 1.0 / (p.mass * p.length * p.length);
    ControlAffineSystem sys;
    sys.state_dim = 2;
    sys.input_dim = 1;
    sys.drift = [g_over_l](const Vec& x) {
        Vec dx(2);
        dx << x(1), -g_over_l * std::sin(x(0));
        return dx;
    };
    sys.input_matrix = [inv_inertia](const Vec&) {
        Mat g(2, 1);
        g << 0.0, inv_inertia;
        return g;
    };
    return sys;
}

inline ControlAffineSystem pendulum_system(double length_m, double mass_kg, double gravity) {
    return pendulum_system(PendulumParams{length_m, mass_kg, gravity});
}

// Evaluation domain is the bounding box of the ellipse enlarged by this factor.
inline constexpr double kDomainMargin = 1.1;

// h = 1 - (theta/theta_max)^2 - (thetadot/thetadot_max)^2
inline BarrierFunction ellipsoid_barrier(double theta_max, double thetadot_max) {
    if (!(theta_max > 0.0) || !(thetadot_max > 0.0)) throw InvalidArgument("ellipsoid_barrier: bounds must be positive");
    const double a2 = theta_max * theta_max;
    const double b2 = thetadot_max * thetadot_max;
    BarrierFunction bf;
    bf.value = [a2, b2](const Vec& x) { return 1.0 - x(0) * x(0) / a2 - x(1) * x(1) / b2; };
    bf.gradient = [a2, b2](const Vec& x) {
        Vec g(2);
        g << -2.0 * x(0) / a2, -2.0 * x(1) / b2;
        return g;
    };
    bf.h_max = 1.0;
    bf.domain.lo = Vec(2);
    bf.domain.hi = Vec(2);
    bf.domain.lo << -kDomainMargin * theta_max, -kDomainMargin * thetadot_max;
    bf.domain.hi << kDomainMargin * theta_max, kDomainMargin * thetadot_max;
    return bf;
}

// Maximum of h over a regular grid of the domain (points_per_axis per
// dimension, endpoints included). Used for barriers without a closed-form
// maximum; only the 0-superlevel set matters so negative results clamp to 0.
inline double estimate_h_max(const std::function<double(const Vec&)>& value, const Box& domain, int points_per_axis = 201) {
    if (points_per_axis < 2) throw InvalidArgument("estimate_h_max: need at least 2 points per axis");
    const auto n = domain.lo.size();
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    double best = 0.0;
    Vec x(n);
    while (true) {
        for (Eigen::Index d = 0; d < n; ++d) {
            const double s = static_cast<double>(idx[static_cast<std::size_t>(d)]) / (points_per_axis - 1);
            x(d) = domain.lo(d) + s * (domain.hi(d) - domain.lo(d));
        }
        best = std::max(best, value(x));
        Eigen::Index d = 0;
        for (; d < n; ++d) {
            if (++idx[static_cast<std::size_t>(d)] < points_per_axis) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
        if (d == n) break;
    }
    return best;
}

}  // namespace bblr
