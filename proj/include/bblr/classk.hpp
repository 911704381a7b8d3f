#pragma once

// Extended class-K-infinity comparison functions.
//
// A ClassKFn is a nonnegative combination of
//   * power terms   c * sign(r) |r|^p   (p = 1 is the linear shape), and
//   * shifted terms c * (inner(r - rho) - inner(-rho)),
// so every constructible instance is strictly increasing with fn(0) = 0.
// Values are immutable once built; all operations return new instances.

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bblr/error.hpp"

namespace bblr {

enum class Shape { Linear, SignedPower };

struct PowerTerm {
    double coeff = 0.0;
    Shape shape = Shape::Linear;
    int degree = 1;  // ignored for Linear

    [[nodiscard]] double operator()(double r) const {
        if (shape == Shape::Linear) return coeff * r;
        const double mag = std::pow(std::abs(r), degree);
        return coeff * (r < 0.0 ? -mag : mag);
    }
};

class ClassKFn;

struct ShiftedTerm {
    double coeff = 1.0;
    double rho = 0.0;
    std::shared_ptr<const ClassKFn> inner;
};

class ClassKFn {
public:
    ClassKFn() = default;

    static ClassKFn linear(double coeff = 1.0) {
        return from_term(PowerTerm{coeff, Shape::Linear, 1});
    }

    static ClassKFn signed_power(int degree, double coeff = 1.0) {
        if (degree < 1) throw InvalidArgument("signed_power: degree must be >= 1");
        return from_term(PowerTerm{coeff, Shape::SignedPower, degree});
    }

    // The identically-zero function. Only meaningful as a summand next to a
    // term with positive weight; degenerate() reports it.
    static ClassKFn zero() { return ClassKFn{}; }

    [[nodiscard]] double operator()(double r) const { return evaluate(r); }

    [[nodiscard]] double evaluate(double r) const {
        double sum = 0.0;
        for (const auto& t : terms_) sum += t(r);
        for (const auto& s : shifted_) sum += s.coeff * (s.inner->evaluate(r - s.rho) - s.inner->evaluate(-s.rho));
        return sum;
    }

    // True when no term carries positive weight (fn == 0 everywhere).
    [[nodiscard]] bool degenerate() const {
        for (const auto& t : terms_)
            if (t.coeff > 0.0) return false;
        for (const auto& s : shifted_)
            if (s.coeff > 0.0 && !s.inner->degenerate()) return false;
        return true;
    }

    [[nodiscard]] bool well_formed() const {
        for (const auto& t : terms_)
            if (!(t.coeff >= 0.0) || !std::isfinite(t.coeff)) return false;
        for (const auto& s : shifted_)
            if (!(s.coeff >= 0.0) || !(s.rho > 0.0) || !s.inner || !s.inner->well_formed()) return false;
        return !degenerate();
    }

    [[nodiscard]] const std::vector<PowerTerm>& terms() const { return terms_; }
    [[nodiscard]] const std::vector<ShiftedTerm>& shifted() const { return shifted_; }

    friend ClassKFn add(const ClassKFn& a, const ClassKFn& b);
    friend ClassKFn scale(const ClassKFn& fn, double c);
    friend ClassKFn make_pssf(const ClassKFn& gamma, double rho);

private:
    static ClassKFn from_term(PowerTerm t) {
        if (!(t.coeff >= 0.0)) throw InvalidArgument("class-K term coefficient must be nonnegative");
        ClassKFn fn;
        fn.terms_.push_back(t);
        return fn;
    }

    std::vector<PowerTerm> terms_;
    std::vector<ShiftedTerm> shifted_;
};

inline ClassKFn add(const ClassKFn& a, const ClassKFn& b) {
    ClassKFn out = a;
    out.terms_.insert(out.terms_.end(), b.terms_.begin(), b.terms_.end());
    out.shifted_.insert(out.shifted_.end(), b.shifted_.begin(), b.shifted_.end());
    return out;
}

inline ClassKFn operator+(const ClassKFn& a, const ClassKFn& b) { return add(a, b); }

inline ClassKFn scale(const ClassKFn& fn, double c) {
    if (!(c >= 0.0)) throw InvalidArgument("scale: factor must be nonnegative");
    ClassKFn out = fn;
    for (auto& t : out.terms_) t.coeff *= c;
    for (auto& s : out.shifted_) s.coeff *= c;
    return out;
}

// r -> gamma(r - rho) - gamma(-rho)
inline ClassKFn make_pssf(const ClassKFn& gamma, double rho) {
    if (!(rho > 0.0)) throw InvalidArgument("make_pssf: rho must be positive");
    ClassKFn out;
    out.shifted_.push_back(ShiftedTerm{1.0, rho, std::make_shared<const ClassKFn>(gamma)});
    return out;
}

struct InversionOptions {
    double tolerance = 1e-9;
    int max_iterations = 200;
};

// Solves gamma(r) = v by bisection. The bracket starts at [-1, 1] and is
// doubled outward until it contains v.
inline double inverse_at(const ClassKFn& gamma, double v, InversionOptions opts = {}) {
    if (v == 0.0) return 0.0;
    if (gamma.degenerate()) throw InvalidArgument("inverse_at: degenerate class-K function");

    double lo = -1.0;
    double hi = 1.0;
    int grow = 0;
    while (gamma(hi) < v) {
        lo = hi;
        hi *= 2.0;
        if (++grow > opts.max_iterations) throw ConvergenceError("inverse_at: bracket growth exceeded iteration cap");
    }
    while (gamma(lo) > v) {
        hi = lo;
        lo *= 2.0;
        if (++grow > opts.max_iterations) throw ConvergenceError("inverse_at: bracket growth exceeded iteration cap");
    }

    for (int it = 0; it < opts.max_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = gamma(mid);
        if (std::abs(fm - v) <= opts.tolerance) return mid;
        if (fm < v)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 0.0) break;
    }
    throw ConvergenceError("inverse_at: bisection did not reach tolerance");
}

struct RhoCheck {
    bool holds = true;
    // Shift such that {x : h(x) + h0 >= 0} is the certifiable set. Zero when
    // the condition holds.
    double h0 = 0.0;
};

// rho <= -gamma(-rho); otherwise h0 = gamma^{-1}(-rho) + rho.
inline RhoCheck check_rho_condition(const ClassKFn& gamma, double rho, InversionOptions opts = {}) {
    if (!(rho > 0.0)) throw InvalidArgument("check_rho_condition: rho must be positive");
    if (rho <= -gamma(-rho)) return RhoCheck{true, 0.0};
    return RhoCheck{false, inverse_at(gamma, -rho, opts) + rho};
}

}  // namespace bblr
