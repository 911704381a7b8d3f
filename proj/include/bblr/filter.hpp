#pragma once

// QP safety filters around a reference controller.
//
//   true oracle : lf + lg u               >= -gamma(h)                      (ground-truth model)
//   nominal     : lf + lg u               >= -gamma(h - rho)                (nominal model)
//   bblr        : lf + lg u + dhat - rho  >= -gamma_pssf(h) - gamma_dhat(h) (nominal + learned residual)
//
// where gamma_pssf(r) = gamma(r - rho) - gamma(-rho) and gamma_dhat is the
// class-K lower bound of the learned residual. The blended decision mixes the
// nominal and bblr inputs by r = q(rho / (rho + s sigma_k)).

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "bblr/blr.hpp"
#include "bblr/classk.hpp"
#include "bblr/dynamics.hpp"
#include "bblr/qp.hpp"

namespace bblr {

enum class Mode { Unfiltered, TrueOracle, Nominal, Bblr, Blended };

inline std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::Unfiltered: return "unfiltered";
        case Mode::TrueOracle: return "true_oracle";
        case Mode::Nominal: return "nominal";
        case Mode::Bblr: return "bblr";
        case Mode::Blended: return "blended";
    }
    return "unknown";
}

inline std::optional<Mode> mode_from_string(std::string_view s) {
    for (Mode m : {Mode::Unfiltered, Mode::TrueOracle, Mode::Nominal, Mode::Bblr, Mode::Blended})
        if (to_string(m) == s) return m;
    return std::nullopt;
}

// Squashing function applied to rho / (rho + s sigma_k).
enum class BlendSquash { Identity, Square };

inline std::string_view to_string(BlendSquash q) { return q == BlendSquash::Identity ? "identity" : "square"; }

inline std::optional<BlendSquash> squash_from_string(std::string_view s) {
    if (s == "identity") return BlendSquash::Identity;
    if (s == "square") return BlendSquash::Square;
    return std::nullopt;
}

struct FilterConfig {
    double rho = 0.5;
    ClassKFn gamma = ClassKFn::linear(1.0);
    int s = 1;
    BlendSquash q = BlendSquash::Identity;
    InputBox input_box = InputBox::symmetric(1, 25.0);
    double warmup_seconds = 0.2;
    PredictiveVarianceMode variance_mode = PredictiveVarianceMode::Additive;

    // Result of the rho-condition check; when it fails the nominal and bblr
    // filters certify {h + h0 >= 0} instead of {h >= 0}.
    RhoCheck rho_check;

    [[nodiscard]] double certified_h(double h) const { return h + rho_check.h0; }
};

inline FilterConfig make_filter_config(FilterConfig cfg) {
    if (!(cfg.rho > 0.0)) throw InvalidArgument("FilterConfig: rho must be positive");
    if (cfg.s < 1) throw InvalidArgument("FilterConfig: s must be a positive integer");
    if (!cfg.gamma.well_formed()) throw InvalidArgument("FilterConfig: gamma is not a well-formed class-K function");
    if (cfg.input_box.dim() < 1) throw InvalidArgument("FilterConfig: empty input box");
    if (!(cfg.warmup_seconds >= 0.0)) throw InvalidArgument("FilterConfig: warmup must be nonnegative");
    cfg.rho_check = check_rho_condition(cfg.gamma, cfg.rho);
    return cfg;
}

struct FilterDecision {
    Vec u_star;
    Mode mode = Mode::Unfiltered;
    double constraint_slack = 0.0;  // a.u_star - b of the constraint that produced u_star
    double blend_r = 0.0;
    bool feasible = true;
    double sigma_k = 0.0;
    bool fallback = false;  // blended decision fell back to a single branch
};

// Learner state consumed by the bblr and blended filters.
struct LearnedModel {
    BarrierBasis basis;
    GaussianPosterior posterior;
    double noise_var = 1.0;
};

namespace detail {

inline FilterDecision decide(Mode mode, const Vec& u_ref, const Eigen::RowVectorXd& a, double b, const InputBox& box) {
    const QpResult qp = solve_min_norm_qp(u_ref, a, b, box);
    FilterDecision d;
    d.u_star = qp.u;
    d.mode = mode;
    d.feasible = qp.feasible;
    d.constraint_slack = a.dot(qp.u.transpose()) - b;
    return d;
}

}  // namespace detail

inline FilterDecision unfiltered(const Vec& u_ref, const FilterConfig& cfg) {
    FilterDecision d;
    d.u_star = cfg.input_box.clamp(u_ref);
    d.mode = Mode::Unfiltered;
    return d;
}

inline FilterDecision true_oracle_filter(const Vec& x, const Vec& u_ref, const ControlAffineSystem& true_sys,
                                         const BarrierFunction& bf, const FilterConfig& cfg) {
    const LieDerivatives lie = lie_derivatives(true_sys, bf, x);
    const double b = -cfg.gamma(bf(x)) - lie.lf;
    return detail::decide(Mode::TrueOracle, u_ref, lie.lg, b, cfg.input_box);
}

// Row and right-hand side of the nominal constraint a.u >= b.
inline std::pair<Eigen::RowVectorXd, double> nominal_constraint(const Vec& x, const ControlAffineSystem& nominal,
                                                                const BarrierFunction& bf, const FilterConfig& cfg) {
    const LieDerivatives lie = lie_derivatives(nominal, bf, x);
    const double h = cfg.certified_h(bf(x));
    return {lie.lg, -cfg.gamma(h - cfg.rho) - lie.lf};
}

inline FilterDecision nominal_filter(const Vec& x, const Vec& u_ref, const ControlAffineSystem& nominal,
                                     const BarrierFunction& bf, const FilterConfig& cfg) {
    const auto [a, b] = nominal_constraint(x, nominal, bf, cfg);
    return detail::decide(Mode::Nominal, u_ref, a, b, cfg.input_box);
}

inline std::pair<Eigen::RowVectorXd, double> bblr_constraint(const Vec& x, const ControlAffineSystem& nominal,
                                                             const BarrierFunction& bf, const LearnedModel& model,
                                                             const FilterConfig& cfg) {
    const LieDerivatives lie = lie_derivatives(nominal, bf, x);
    const double h = cfg.certified_h(bf(x));
    // alpha and beta do not depend on u; any admissible u works here.
    const ResidualEstimate est =
        predicted_residual(model.posterior, model.basis, h, Vec::Zero(model.basis.input_dim));
    const ClassKFn gamma_pssf = make_pssf(cfg.gamma, cfg.rho);
    const ClassKFn gamma_dhat = residual_bound(model.posterior, model.basis);
    const double h_clamped = clamp_h(h);
    const Eigen::RowVectorXd a = lie.lg + est.beta.transpose();
    const double b = -gamma_pssf(h) - gamma_dhat(h_clamped) - lie.lf - est.alpha + cfg.rho;
    return {a, b};
}

inline FilterDecision bblr_filter(const Vec& x, const Vec& u_ref, const ControlAffineSystem& nominal,
                                  const BarrierFunction& bf, const LearnedModel& model, const FilterConfig& cfg) {
    const auto [a, b] = bblr_constraint(x, nominal, bf, model, cfg);
    return detail::decide(Mode::Bblr, u_ref, a, b, cfg.input_box);
}

inline double blending_ratio(double rho, int s, double sigma_k, BlendSquash q = BlendSquash::Identity) {
    if (!(rho > 0.0) || s < 1 || !(sigma_k >= 0.0)) throw InvalidArgument("blending_ratio: invalid arguments");
    const double z = rho / (rho + s * sigma_k);
    const double r = q == BlendSquash::Identity ? z : z * z;
    return std::clamp(r, 0.0, 1.0);
}

// Predictive standard deviation of the learned residual at (h, u).
inline double residual_sigma(const LearnedModel& model, double h, const Vec& u, PredictiveVarianceMode mode) {
    const Vec phi = features(model.basis, h, u);
    return std::sqrt(predict(model.posterior, phi, model.noise_var, mode).variance);
}

inline FilterDecision blended_decision(const Vec& x, const Vec& u_ref, const ControlAffineSystem& nominal,
                                       const BarrierFunction& bf, const LearnedModel& model, const FilterConfig& cfg,
                                       double t) {
    FilterDecision nom = nominal_filter(x, u_ref, nominal, bf, cfg);
    nom.blend_r = 0.0;
    if (t < cfg.warmup_seconds) return nom;

    FilterDecision learned = bblr_filter(x, u_ref, nominal, bf, model, cfg);
    const double sigma = residual_sigma(model, cfg.certified_h(bf(x)), learned.u_star, cfg.variance_mode);

    if (!learned.feasible) {
        nom.fallback = true;
        nom.sigma_k = sigma;
        return nom;
    }
    if (!nom.feasible) {
        learned.blend_r = 1.0;
        learned.fallback = true;
        learned.sigma_k = sigma;
        return learned;
    }

    const double r = blending_ratio(cfg.rho, cfg.s, sigma, cfg.q);
    FilterDecision out;
    out.mode = Mode::Blended;
    out.u_star = (1.0 - r) * nom.u_star + r * learned.u_star;
    out.blend_r = r;
    out.sigma_k = sigma;
    out.feasible = true;
    const auto [a, b] = bblr_constraint(x, nominal, bf, model, cfg);
    out.constraint_slack = a.dot(out.u_star.transpose()) - b;
    return out;
}

}  // namespace bblr
