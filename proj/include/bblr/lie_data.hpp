#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "bblr/blr.hpp"
#include "bblr/dynamics.hpp"
#include "bblr/error.hpp"

namespace bblr {

struct Sample {
    Vec x;
    Vec u;
    double h = 0.0;
    long t_index = 0;
};

// The last T + 1 samples at contiguous control steps (T intervals).
class SampleWindow {
public:
    explicit SampleWindow(int intervals) : intervals_(intervals) {
        if (intervals < 1) throw InvalidArgument("SampleWindow: need at least one interval");
    }

    void push(Sample s) {
        if (!entries_.empty() && s.t_index != entries_.back().t_index + 1)
            throw InvalidArgument("SampleWindow::push: non-contiguous time index");
        entries_.push_back(std::move(s));
        while (entries_.size() > static_cast<std::size_t>(intervals_) + 1) entries_.pop_front();
    }

    void push(const Vec& x, const Vec& u, double h, long t_index) { push(Sample{x, u, h, t_index}); }

    [[nodiscard]] int intervals() const { return intervals_; }
    [[nodiscard]] std::size_t size() const { return entries_.size(); }
    [[nodiscard]] bool empty() const { return entries_.empty(); }
    [[nodiscard]] const std::deque<Sample>& entries() const { return entries_; }
    [[nodiscard]] const Sample& operator[](std::size_t i) const { return entries_[i]; }

    void clear() { entries_.clear(); }

private:
    int intervals_;
    std::deque<Sample> entries_;
};

struct RegressionSample {
    Vec phi;
    double y = 0.0;
};

// Forward-difference Lie derivative minus the nominal model's prediction,
// one row per consecutive pair in the window.
inline std::vector<RegressionSample> build_regression_set(const SampleWindow& window, const ControlAffineSystem& nominal,
                                                          const BarrierFunction& bf, const BarrierBasis& basis, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("build_regression_set: dt must be positive");
    std::vector<RegressionSample> out;
    if (window.size() < 2) return out;
    out.reserve(window.size() - 1);
    for (std::size_t k = 0; k + 1 < window.size(); ++k) {
        const Sample& s = window[k];
        const double fd = (window[k + 1].h - s.h) / dt;
        const LieDerivatives lie = lie_derivatives(nominal, bf, s.x);
        out.push_back({features(basis, s.h, s.u), fd - lie.along(s.u)});
    }
    return out;
}

// Stacks a regression set into design matrix and target vector.
inline std::pair<Mat, Vec> design_matrix(const std::vector<RegressionSample>& set, int feature_dim) {
    Mat design(static_cast<Eigen::Index>(set.size()), feature_dim);
    Vec targets(static_cast<Eigen::Index>(set.size()));
    for (std::size_t i = 0; i < set.size(); ++i) {
        design.row(static_cast<Eigen::Index>(i)) = set[i].phi.transpose();
        targets(static_cast<Eigen::Index>(i)) = set[i].y;
    }
    return {design, targets};
}

// Forward-difference error bound c dt / 2, with c a bound on |d^2 h / dt^2|.
inline double sigma_diff(double c, double dt) {
    if (!(c > 0.0) || !(dt > 0.0)) throw InvalidArgument("sigma_diff: curvature bound and dt must be positive");
    return c * dt / 2.0;
}

}  // namespace bblr
