#pragma once

#include <Eigen/Dense>

#include "rffkm/common.hpp"

namespace rffkm {

// Annealing schedule for the power-mean exponent: s <- gamma * s every
// `cadence` iterations, never below `s_floor`. Defaults: gamma 1.04,
// single-view cadence 3 (multi-view solvers construct with cadence 2).
struct PowerSchedule {
    double s0 = -15.0;
    double gamma = 1.04;
    int cadence = 3;
    double s_floor = -1e6;

    // `iteration` is 1-based; multiplies s on cadence boundaries only.
    double advance(double s, int iteration) const;
    void validate() const;
};

/// Power mean M_s(y) = ((1/k) sum y_i^s)^(1/s), evaluated in log space with
/// a min-shift (max-shift for s > 0) so deeply annealed exponents neither
/// overflow nor underflow. Entries must be strictly positive, s nonzero.
double power_mean(const Eigen::Ref<const Eigen::VectorXd>& y, double s);

/// Partial derivatives of M_s: w_j = (1/k) y_j^(s-1) / ((1/k) sum y_c^s)^(1-1/s),
/// s < 0. Computed in log space; weights whose logs fall below the smallest
/// normal double flush to exact zero so downstream normalizations never see
/// subnormal noise.
Eigen::VectorXd gradient_weights(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 double s);

}  // namespace rffkm
