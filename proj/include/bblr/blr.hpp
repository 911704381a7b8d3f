#pragma once

// Bayesian linear regression over a barrier basis phi_j(h(x)).
//
// Feature layout for N basis shapes and m inputs (M = N (m + 1)):
//   [ phi_1(h) .. phi_N(h) | u_1 phi_1(h) .. u_1 phi_N(h) | ... | u_m phi_N(h) ]
// Every phi_j vanishes at h = 0, so any learned residual is zero on the
// safe-set boundary regardless of the weights.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "bblr/classk.hpp"
#include "bblr/dynamics.hpp"
#include "bblr/error.hpp"

namespace bblr {

struct BarrierBasis {
    std::vector<int> degrees;  // monomial degrees, each >= 1
    int input_dim = 1;
    double u_max = 1.0;  // sup-norm bound of the admissible input box

    BarrierBasis() = default;
    BarrierBasis(std::vector<int> degs, int m, double umax) : degrees(std::move(degs)), input_dim(m), u_max(umax) {
        if (degrees.empty()) throw InvalidArgument("BarrierBasis: need at least one basis function");
        for (int d : degrees)
            if (d < 1) throw InvalidArgument("BarrierBasis: monomial degree must be >= 1 so that phi(0) = 0");
        if (input_dim < 0) throw InvalidArgument("BarrierBasis: negative input dimension");
        if (!(u_max >= 0.0)) throw InvalidArgument("BarrierBasis: u_max must be nonnegative");
    }

    [[nodiscard]] int size() const { return static_cast<int>(degrees.size()); }
    [[nodiscard]] int feature_dim() const { return size() * (input_dim + 1); }

    [[nodiscard]] double phi(int j, double h) const { return std::pow(h, degrees[static_cast<std::size_t>(j)]); }

    // gamma_j with |phi_j| <= gamma_j on [0, h_max]; equality for monomials.
    [[nodiscard]] ClassKFn bound(int j) const {
        const int d = degrees[static_cast<std::size_t>(j)];
        return d == 1 ? ClassKFn::linear(1.0) : ClassKFn::signed_power(d, 1.0);
    }
};

// Negative h (state has left the safe set) is clamped to zero.
[[nodiscard]] inline double clamp_h(double h) { return std::max(h, 0.0); }

inline Vec features(const BarrierBasis& basis, double h_value, const Vec& u) {
    if (u.size() != basis.input_dim) throw InvalidArgument("features: input dimension mismatch");
    constexpr double kBoundSlack = 1e-9;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (std::abs(u(i)) > basis.u_max + kBoundSlack) throw InvalidArgument("features: input exceeds u_max");

    const int n = basis.size();
    const double h = clamp_h(h_value);
    Vec phi(basis.feature_dim());
    for (int j = 0; j < n; ++j) phi(j) = basis.phi(j, h);
    for (int i = 0; i < basis.input_dim; ++i) phi.segment((i + 1) * n, n) = u(i) * phi.head(n);
    return phi;
}

struct GaussianPosterior {
    Vec mean;
    Mat covariance;
    Mat precision;
    long sample_count = 0;

    static GaussianPosterior prior(int dim, double tau) {
        if (!(tau > 0.0)) throw InvalidArgument("GaussianPosterior::prior: tau must be positive");
        GaussianPosterior p;
        p.mean = Vec::Zero(dim);
        p.covariance = Mat::Identity(dim, dim) * (tau * tau);
        p.precision = Mat::Identity(dim, dim) / (tau * tau);
        return p;
    }

    static GaussianPosterior from_moments(Vec mean, Mat cov);

    [[nodiscard]] int dim() const { return static_cast<int>(mean.size()); }
};

namespace detail {

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

// Inverse of a symmetric positive-definite matrix via Cholesky.
inline Mat spd_inverse(const Mat& m, const char* what) {
    Eigen::LLT<Mat> llt(symmetrize(m));
    if (llt.info() != Eigen::Success) throw NumericalError(what);
    Mat inv = llt.solve(Mat::Identity(m.rows(), m.cols()));
    if (!inv.allFinite()) throw NumericalError(what);
    return symmetrize(inv);
}

}  // namespace detail

inline GaussianPosterior GaussianPosterior::from_moments(Vec mean, Mat cov) {
    if (mean.size() != cov.rows() || cov.rows() != cov.cols()) throw InvalidArgument("from_moments: dimension mismatch");
    GaussianPosterior p;
    p.precision = detail::spd_inverse(cov, "from_moments: covariance is not positive definite");
    p.covariance = detail::symmetrize(cov);
    p.mean = std::move(mean);
    return p;
}

// One conjugate update with a single observation y = w^T phi + noise.
inline GaussianPosterior update(const GaussianPosterior& post, const Vec& phi, double y, double noise_var) {
    if (!(noise_var > 0.0)) throw InvalidArgument("update: noise variance must be positive");
    if (phi.size() != post.dim()) throw InvalidArgument("update: feature dimension mismatch");
    GaussianPosterior out;
    out.precision = detail::symmetrize(post.precision + (phi * phi.transpose()) / noise_var);
    out.covariance = detail::spd_inverse(out.precision, "update: posterior precision is not positive definite");
    out.mean = out.covariance * (post.precision * post.mean + phi * (y / noise_var));
    out.sample_count = post.sample_count + 1;
    return out;
}

inline GaussianPosterior batch_fit(const Vec& prior_mean, const Mat& prior_cov, const Mat& design, const Vec& targets,
                                   double noise_var) {
    if (!(noise_var > 0.0)) throw InvalidArgument("batch_fit: noise variance must be positive");
    if (prior_cov.rows() != prior_mean.size() || prior_cov.cols() != prior_mean.size())
        throw InvalidArgument("batch_fit: prior dimension mismatch");
    if (design.rows() != targets.size() || (design.rows() > 0 && design.cols() != prior_mean.size()))
        throw InvalidArgument("batch_fit: design dimension mismatch");

    const Mat prior_prec = detail::spd_inverse(prior_cov, "batch_fit: prior covariance is singular");
    GaussianPosterior out;
    if (design.rows() == 0) {
        out.mean = prior_mean;
        out.covariance = detail::symmetrize(prior_cov);
        out.precision = prior_prec;
        return out;
    }
    out.precision = detail::symmetrize(prior_prec + design.transpose() * design / noise_var);
    out.covariance = detail::spd_inverse(out.precision, "batch_fit: posterior precision is not positive definite");
    out.mean = out.covariance * (prior_prec * prior_mean + design.transpose() * targets / noise_var);
    out.sample_count = design.rows();
    return out;
}

inline GaussianPosterior batch_fit(const GaussianPosterior& prior, const Mat& design, const Vec& targets, double noise_var) {
    GaussianPosterior out = batch_fit(prior.mean, prior.covariance, design, targets, noise_var);
    out.sample_count += prior.sample_count;
    return out;
}

// How the observation noise enters the predictive variance.
//   Additive:      phi^T S phi + sigma^2   (standard conjugate BLR)
//   InverseNoise:  phi^T S phi + 1/sigma^2 (alternative printed form)
enum class PredictiveVarianceMode { Additive, InverseNoise };

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

inline Prediction predict(const GaussianPosterior& post, const Vec& phi, double noise_var,
                          PredictiveVarianceMode mode = PredictiveVarianceMode::Additive) {
    if (!(noise_var > 0.0)) throw InvalidArgument("predict: noise variance must be positive");
    const double epistemic = phi.dot(post.covariance * phi);
    const double aleatoric = mode == PredictiveVarianceMode::Additive ? noise_var : 1.0 / noise_var;
    return {post.mean.dot(phi), epistemic + aleatoric};
}

// gamma_dhat = sum_j (|w_j| + u_max sum_i |w_{iN+j}|) gamma_j.
// Returns ClassKFn::zero() (degenerate) when all weights vanish.
inline ClassKFn residual_bound(const GaussianPosterior& post, const BarrierBasis& basis) {
    if (post.dim() != basis.feature_dim()) throw InvalidArgument("residual_bound: posterior/basis dimension mismatch");
    if (!post.mean.allFinite()) throw InvalidArgument("residual_bound: non-finite posterior mean");
    const int n = basis.size();
    ClassKFn bound = ClassKFn::zero();
    for (int j = 0; j < n; ++j) {
        double weight = std::abs(post.mean(j));
        for (int i = 0; i < basis.input_dim; ++i) weight += std::abs(post.mean((i + 1) * n + j)) * basis.u_max;
        if (weight > 0.0) bound = add(bound, scale(basis.bound(j), weight));
    }
    return bound;
}

struct ResidualEstimate {
    double alpha = 0.0;  // input-independent part
    Vec beta;            // input gain, one entry per channel
    double delta = 0.0;  // alpha + beta . u
};

inline ResidualEstimate predicted_residual(const GaussianPosterior& post, const BarrierBasis& basis, double h_value,
                                           const Vec& u) {
    const Vec phi = features(basis, h_value, u);
    const int n = basis.size();
    ResidualEstimate est;
    est.alpha = post.mean.head(n).dot(phi.head(n));
    est.beta = Vec(basis.input_dim);
    for (int i = 0; i < basis.input_dim; ++i) est.beta(i) = post.mean.segment((i + 1) * n, n).dot(phi.head(n));
    est.delta = post.mean.dot(phi);
    return est;
}

}  // namespace bblr
