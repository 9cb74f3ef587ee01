#include "rffkm/powermeans.hpp"

#include <cmath>
#include <limits>

namespace rffkm {

namespace {

// log of the smallest normal double; anything below flushes to exact zero.
const double kLogMinNormal = std::log(std::numeric_limits<double>::min());

void check_entries(const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (y.size() == 0) {
        throw InvalidInput("power mean: empty vector");
    }
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!(y[i] > 0.0) || !std::isfinite(y[i])) {
            throw InvalidInput("power mean: entries must be positive and finite");
        }
    }
}

}  // namespace

double PowerSchedule::advance(double s, int iteration) const {
    validate();
    if (!(s < 0.0)) {
        throw InvalidInput("PowerSchedule::advance: s must be negative");
    }
    if (iteration % cadence == 0) {
        s *= gamma;
    }
    return std::max(s, s_floor);
}

void PowerSchedule::validate() const {
    if (!(s0 < 0.0)) throw InvalidInput("PowerSchedule: s0 must be negative");
    if (!(gamma >= 1.0)) throw InvalidInput("PowerSchedule: gamma must be >= 1");
    if (cadence < 1) throw InvalidInput("PowerSchedule: cadence must be >= 1");
    if (!(s_floor < 0.0)) throw InvalidInput("PowerSchedule: s_floor must be negative");
}

double power_mean(const Eigen::Ref<const Eigen::VectorXd>& y, double s) {
    check_entries(y);
    if (s == 0.0 || !std::isfinite(s)) {
        throw InvalidInput("power_mean: s must be nonzero and finite");
    }
    const Eigen::Index k = y.size();
    // Shift by min (s < 0) or max (s > 0) so every exponentiated ratio is <= 1.
    const double shift = (s < 0.0) ? y.minCoeff() : y.maxCoeff();
    const double log_shift = std::log(shift);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        sum += std::exp(s * (std::log(y[i]) - log_shift));
    }
    // sum is in [1, k]; the correction exponent stays tame for any s.
    return shift * std::exp((std::log(sum) - std::log(static_cast<double>(k))) / s);
}

Eigen::VectorXd gradient_weights(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 double s) {
    check_entries(y);
    if (!(s < 0.0)) {
        throw InvalidInput("gradient_weights: s must be negative");
    }
    const Eigen::Index k = y.size();
    const double log_min = std::log(y.minCoeff());
    Eigen::VectorXd shifted_logs(k);  // a_j = ln y_j - ln min >= 0
    double sum = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        shifted_logs[j] = std::log(y[j]) - log_min;
        sum += std::exp(s * shifted_logs[j]);
    }
    const double log_sum = std::log(sum);
    const double log_k = std::log(static_cast<double>(k));
    Eigen::VectorXd w(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        // ln w_j = -(ln k)/s + (s-1) a_j - (1 - 1/s) ln S; the min-scale cancels.
        const double lw = -log_k / s + (s - 1.0) * shifted_logs[j]
                          - (1.0 - 1.0 / s) * log_sum;
        w[j] = (lw < kLogMinNormal) ? 0.0 : std::exp(lw);
    }
    return w;
}

}  // namespace rffkm
