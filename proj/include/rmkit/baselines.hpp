#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rmkit/errors.hpp"
#include "rmkit/fresnel.hpp"
#include "rmkit/scene.hpp"

namespace rmkit {

/// 20*log10(c / 4pi); the published formula rounds it to 147.55.
inline const double kFsplConstantDb = 20.0 * std::log10(kSpeedOfLight / (4.0 * std::numbers::pi));
inline constexpr double kMinFsplDistance = 0.01;

/// Free-space path loss in dB (negative) at 3D distance d.
inline double fspl_db(double distance_m, double frequency_hz, double offset_db = 0.0) {
    const double d = std::max(distance_m, kMinFsplDistance);
    return -20.0 * std::log10(d * frequency_hz) + kFsplConstantDb + offset_db;
}

inline Vec3 receiver_point(const MapGeometry& g, int row, int col) {
    const Vec2 p = g.pixel_center(row, col);
    return {p.x, p.y, g.rx_height};
}

/// FSPL with offset `a` on every valid pixel of `layout`, clamped to [noise_floor, 0].
inline RadioMap fspl_predict(const Transmitter& tx, const RadioMap& layout, double a_db,
                             double noise_floor_db = kNoiseFloorDb) {
    RadioMap out = layout.layout();
    for (int r = 0; r < out.geometry.rows; ++r) {
        for (int c = 0; c < out.geometry.cols; ++c) {
            if (!out.is_valid(r, c)) continue;
            const double d = norm(receiver_point(out.geometry, r, c) - tx.position);
            out.at(r, c) = std::clamp(fspl_db(d, tx.frequency_hz, a_db), noise_floor_db, 0.0);
        }
    }
    return out;
}

/// Least-squares constant: the mean residual of the observations over the a=0 curve.
inline double fit_fspl_offset(const ObservationSet& obs, const Transmitter& tx, const MapGeometry& g) {
    if (obs.entries.empty()) throw FitError("cannot fit the FSPL offset without observations");
    double sum = 0.0;
    for (const auto& o : obs.entries) {
        const double d = norm(receiver_point(g, o.row, o.col) - tx.position);
        sum += o.path_loss_db - fspl_db(d, tx.frequency_hz);
    }
    return sum / static_cast<double>(obs.entries.size());
}

enum class RbfKernel { gaussian, thin_plate_spline };

/// Default Gaussian width rule.
enum class ShapeRule {
    average_spacing,  ///< (product of nonzero bounding-box edges / N)^(1/dims)
    median_pairwise,  ///< median distance over all observation pairs
};

struct RbfConfig {
    RbfKernel kernel = RbfKernel::gaussian;
    std::optional<double> shape_epsilon;  ///< meters; unset applies `shape_rule`
    ShapeRule shape_rule = ShapeRule::average_spacing;
    double regularization = 1e-10;
    /// Gaussian only: interpolate residuals about the observation mean so the
    /// surface decays to the mean rather than to 0 dB away from the nodes.
    bool center_mean = true;
    double min_rcond = 1e-14;
    double noise_floor_db = kNoiseFloorDb;
    bool clamp_output = true;
};

namespace detail {

inline double tps_kernel(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

inline double gaussian_kernel(double r, double eps) {
    const double q = r / eps;
    return std::exp(-q * q);
}

}  // namespace detail

inline double default_shape_epsilon(const std::vector<Vec2>& nodes, ShapeRule rule) {
    if (nodes.empty()) throw WellPosednessError("no observations");
    if (rule == ShapeRule::median_pairwise) {
        std::vector<double> d;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            for (std::size_t j = i + 1; j < nodes.size(); ++j) d.push_back(norm(nodes[i] - nodes[j]));
        }
        if (d.empty()) return 1.0;
        auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
        std::nth_element(d.begin(), mid, d.end());
        if (d.size() % 2 == 1) return *mid;
        const double hi = *mid;
        const double lo = *std::max_element(d.begin(), mid);
        return 0.5 * (lo + hi);
    }
    Vec2 lo = nodes.front(), hi = nodes.front();
    for (const auto& p : nodes) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    double prod = 1.0;
    int dims = 0;
    for (double e : {hi.x - lo.x, hi.y - lo.y}) {
        if (e > 0.0) {
            prod *= e;
            ++dims;
        }
    }
    if (dims == 0) return 1.0;
    return std::pow(prod / static_cast<double>(nodes.size()), 1.0 / dims);
}

/// Fitted radial-basis interpolant over observation pixel centers.
class RbfInterpolant {
public:
    RbfInterpolant(const ObservationSet& obs, const MapGeometry& g, const RbfConfig& config) : config_(config) {
        const std::size_t n = obs.entries.size();
        for (const auto& o : obs.entries) nodes_.push_back(g.pixel_center(o.row, o.col));
        Eigen::VectorXd y(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = obs.entries[i].path_loss_db;
        if (config.kernel == RbfKernel::gaussian) {
            fit_gaussian(y);
        } else {
            fit_tps(y);
        }
    }

    double operator()(Vec2 p) const {
        double v = mean_;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            v += weights_(static_cast<Eigen::Index>(i)) * kernel(norm(p - nodes_[i]));
        }
        if (config_.kernel == RbfKernel::thin_plate_spline) v += affine_(0) + affine_(1) * p.x + affine_(2) * p.y;
        return v;
    }

    double epsilon() const { return epsilon_; }
    double rcond() const { return rcond_; }

private:
    double kernel(double r) const {
        return config_.kernel == RbfKernel::gaussian ? detail::gaussian_kernel(r, epsilon_) : detail::tps_kernel(r);
    }

    Eigen::MatrixXd kernel_matrix() const {
        const auto n = static_cast<Eigen::Index>(nodes_.size());
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double v = kernel(norm(nodes_[static_cast<std::size_t>(i)] - nodes_[static_cast<std::size_t>(j)]));
                k(i, j) = v;
                k(j, i) = v;
            }
        }
        k.diagonal().array() += config_.regularization;
        return k;
    }

    void fit_gaussian(Eigen::VectorXd y) {
        if (nodes_.empty()) throw WellPosednessError("gaussian RBF needs at least one observation");
        epsilon_ = config_.shape_epsilon.value_or(default_shape_epsilon(nodes_, config_.shape_rule));
        if (!(epsilon_ > 0.0)) throw InvalidRange("shape_epsilon must be positive");
        if (config_.center_mean) {
            mean_ = y.mean();
            y.array() -= mean_;
        }
        const Eigen::MatrixXd k = kernel_matrix();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
        rcond_ = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
        if (!(rcond_ >= config_.min_rcond)) throw ConditioningError("gaussian RBF system is singular", rcond_);
        weights_ = ldlt.solve(y);
        // One refinement step toward the unregularized system: the regularized
        // solve alone misses the nodes by regularization * weight.
        weights_ += ldlt.solve(y - k * weights_ + config_.regularization * weights_);
    }

    void fit_tps(const Eigen::VectorXd& y) {
        const auto n = static_cast<Eigen::Index>(nodes_.size());
        if (n < 3) throw WellPosednessError("thin-plate spline needs at least 3 observations");
        Eigen::MatrixXd p(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            p(i, 0) = 1.0;
            p(i, 1) = nodes_[static_cast<std::size_t>(i)].x;
            p(i, 2) = nodes_[static_cast<std::size_t>(i)].y;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(p);
        qr.setThreshold(1e-9);
        if (qr.rank() < 3) throw WellPosednessError("thin-plate spline observations are collinear");

        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 3, n + 3);
        a.topLeftCorner(n, n) = kernel_matrix();
        a.topRightCorner(n, 3) = p;
        a.bottomLeftCorner(3, n) = p.transpose();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 3);
        rhs.head(n) = y;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        rcond_ = lu.rcond();
        if (!(rcond_ >= config_.min_rcond)) throw ConditioningError("thin-plate spline system is singular", rcond_);
        Eigen::VectorXd sol = lu.solve(rhs);
        Eigen::VectorXd residual = rhs - a * sol;
        residual.head(n) += config_.regularization * sol.head(n);
        sol += lu.solve(residual);
        weights_ = sol.head(n);
        affine_ = sol.tail(3);
    }

    RbfConfig config_;
    std::vector<Vec2> nodes_;
    Eigen::VectorXd weights_;
    Eigen::Vector3d affine_ = Eigen::Vector3d::Zero();
    double mean_ = 0.0;
    double epsilon_ = 0.0;
    double rcond_ = 0.0;
};

inline RadioMap rbf_fit_predict(const ObservationSet& obs, const RbfConfig& config, const RadioMap& layout) {
    const RbfInterpolant f(obs, layout.geometry, config);
    RadioMap out = layout.layout();
    for (int r = 0; r < out.geometry.rows; ++r) {
        for (int c = 0; c < out.geometry.cols; ++c) {
            if (!out.is_valid(r, c)) continue;
            double v = f(out.geometry.pixel_center(r, c));
            if (config.clamp_output) v = std::clamp(v, config.noise_floor_db, 0.0);
            out.at(r, c) = v;
        }
    }
    return out;
}

}  // namespace rmkit
