#pragma once

// Fixed-step closed-loop simulation of the true system under one of the
// filter modes. Inputs are held constant over a control period and the true
// dynamics are integrated with classical RK4 substeps.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "bblr/blr.hpp"
#include "bblr/dynamics.hpp"
#include "bblr/filter.hpp"
#include "bblr/lie_data.hpp"

namespace bblr {

inline Vec rk4_step(const ControlAffineSystem& sys, const Vec& x, const Vec& u, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("rk4_step: dt must be positive");
    const Vec k1 = sys.rhs(x, u);
    const Vec k2 = sys.rhs(x + 0.5 * dt * k1, u);
    const Vec k3 = sys.rhs(x + 0.5 * dt * k2, u);
    const Vec k4 = sys.rhs(x + dt * k3, u);
    Vec next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) throw BlowUpError("rk4_step: non-finite state");
    return next;
}

// Swing-up law designed on the nominal pendulum.
inline Vec swingup_controller(const Vec& x) {
    return Vec::Constant(1, -18.8 * (x(0) - std::numbers::pi) - 6.1 * x(1) + 5.0);
}

using Controller = std::function<Vec(const Vec&)>;

struct SimConfig {
    double dt_control = 0.002;
    int substeps = 10;
    double duration = 6.0;
    Vec initial_state = Vec::Zero(2);
    Mode mode = Mode::Bblr;

    [[nodiscard]] long steps() const { return std::lround(duration / dt_control); }
};

inline void validate(const SimConfig& cfg) {
    if (!(cfg.dt_control > 0.0)) throw InvalidArgument("SimConfig: dt_control must be positive");
    if (cfg.substeps < 1) throw InvalidArgument("SimConfig: substeps must be >= 1");
    if (!(cfg.duration >= cfg.dt_control)) throw InvalidArgument("SimConfig: duration must be at least one control step");
    if (cfg.mode == Mode::Blended) throw InvalidArgument("SimConfig: 'blended' is a decision kind, not a run mode");
}

struct LearnerConfig {
    std::vector<int> degrees{1, 2, 3, 4, 5};
    double prior_tau = 0.4;
    double curvature_bound = 6.0;  // bound on |d^2 h / dt^2| used for sigma_diff
    double window_seconds = 0.2;
};

struct TrajectoryRecord {
    double t = 0.0;
    Vec x;
    Vec u_ref;
    Vec u_applied;
    double h = 0.0;
    double lie_true = 0.0;
    double blend_r = 0.0;
    double sigma_k = 0.0;
    bool feasible = true;
    Mode mode = Mode::Unfiltered;
};

struct Trajectory {
    Mode run_mode = Mode::Unfiltered;
    std::vector<TrajectoryRecord> records;
    long infeasible_count = 0;
    long fallback_count = 0;
    long clamped_h_count = 0;  // learner saw h < 0 and clamped it

    [[nodiscard]] double min_h() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& r : records) m = std::min(m, r.h);
        return m;
    }

    // Smallest true Lie derivative among samples with h <= h_threshold;
    // empty if no sample came that close to the boundary.
    [[nodiscard]] std::optional<double> min_boundary_lie(double h_threshold = 0.05) const {
        std::optional<double> m;
        for (const auto& r : records)
            if (r.h <= h_threshold) m = m ? std::min(*m, r.lie_true) : r.lie_true;
        return m;
    }

    [[nodiscard]] Vec final_state() const { return records.empty() ? Vec{} : records.back().x; }
};

struct Plant {
    ControlAffineSystem true_sys;
    ControlAffineSystem nominal_sys;
    BarrierFunction barrier;
    Controller controller = swingup_controller;
};

inline int window_intervals(const LearnerConfig& lc, double dt) {
    return std::max(1, static_cast<int>(std::lround(lc.window_seconds / dt)));
}

// Posterior from the window's regression set, refit from the prior.
inline GaussianPosterior refit(const SampleWindow& window, const Plant& plant, const LearnedModel& model,
                               const GaussianPosterior& prior, double dt) {
    const auto set = build_regression_set(window, plant.nominal_sys, plant.barrier, model.basis, dt);
    if (set.empty()) return prior;
    const auto [design, targets] = design_matrix(set, model.basis.feature_dim());
    return batch_fit(prior.mean, prior.covariance, design, targets, model.noise_var);
}

inline Trajectory run_closed_loop(const SimConfig& sim, const FilterConfig& filter, const LearnerConfig& learner,
                                  const Plant& plant) {
    validate(sim);
    const double dt = sim.dt_control;
    const long steps = sim.steps();

    const BarrierBasis basis(learner.degrees, filter.input_box.dim(), filter.input_box.sup_norm());
    const double sd = sigma_diff(learner.curvature_bound, dt);
    const GaussianPosterior prior = GaussianPosterior::prior(basis.feature_dim(), learner.prior_tau);
    LearnedModel model{basis, prior, sd * sd};
    SampleWindow window(window_intervals(learner, dt));

    Trajectory traj;
    traj.run_mode = sim.mode;
    traj.records.reserve(static_cast<std::size_t>(steps) + 1);

    Vec x = sim.initial_state;
    const double h_sub = dt / sim.substeps;
    for (long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double h = plant.barrier(x);
        const Vec u_ref = plant.controller(x);

        FilterDecision d;
        switch (sim.mode) {
            case Mode::Unfiltered: d = unfiltered(u_ref, filter); break;
            case Mode::TrueOracle: d = true_oracle_filter(x, u_ref, plant.true_sys, plant.barrier, filter); break;
            case Mode::Nominal: d = nominal_filter(x, u_ref, plant.nominal_sys, plant.barrier, filter); break;
            case Mode::Bblr:
                model.posterior = refit(window, plant, model, prior, dt);
                d = blended_decision(x, u_ref, plant.nominal_sys, plant.barrier, model, filter, t);
                break;
            case Mode::Blended: break;
        }

        if (!d.feasible) ++traj.infeasible_count;
        if (d.fallback) ++traj.fallback_count;

        TrajectoryRecord rec;
        rec.t = t;
        rec.x = x;
        rec.u_ref = u_ref;
        rec.u_applied = d.u_star;
        rec.h = h;
        // Logged for every mode, including states outside the filter domain.
        rec.lie_true = plant.barrier.grad(x).dot(plant.true_sys.rhs(x, d.u_star));
        rec.blend_r = d.blend_r;
        rec.sigma_k = d.sigma_k;
        rec.feasible = d.feasible;
        rec.mode = d.mode;
        traj.records.push_back(std::move(rec));

        if (k == steps) break;

        if (sim.mode == Mode::Bblr) {
            if (h < 0.0) ++traj.clamped_h_count;
            window.push(x, d.u_star, h, k);
        }
        for (int i = 0; i < sim.substeps; ++i) x = rk4_step(plant.true_sys, x, d.u_star, h_sub);
    }
    return traj;
}

}  // namespace bblr
