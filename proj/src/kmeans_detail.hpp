#pragma once

// Internal k-means++ seeding and Lloyd refinement shared by the solver
// initializers and the Euclidean baselines. Not installed.

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "rffkm/common.hpp"

namespace rffkm::detail {

// Picks the next index proportional to `weights`; falls back to a uniform
// pick among unchosen indices when all weights vanish (duplicate points).
inline int weighted_pick(const Eigen::VectorXd& weights,
                         const std::vector<char>& chosen,
                         std::mt19937_64& eng) {
    const double total = weights.sum();
    const int n = static_cast<int>(weights.size());
    if (total > 0.0) {
        const double r = (static_cast<double>(eng()) * 0x1.0p-64) * total;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += weights[i];
            if (r < acc) return i;
        }
        return n - 1;
    }
    int available = 0;
    for (int i = 0; i < n; ++i) available += !chosen[i];
    if (available == 0) return static_cast<int>(eng() % static_cast<std::uint64_t>(n));
    int target = static_cast<int>(eng() % static_cast<std::uint64_t>(available));
    for (int i = 0; i < n; ++i) {
        if (!chosen[i] && target-- == 0) return i;
    }
    return n - 1;
}

inline std::vector<int> kmeanspp_seeds(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                       int k, std::mt19937_64& eng) {
    const int n = static_cast<int>(rows.rows());
    std::vector<int> seeds;
    seeds.reserve(k);
    std::vector<char> chosen(n, 0);
    seeds.push_back(static_cast<int>(eng() % static_cast<std::uint64_t>(n)));
    chosen[seeds[0]] = 1;
    Eigen::VectorXd d2 =
        (rows.rowwise() - rows.row(seeds[0])).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        for (int prev : seeds) d2[prev] = 0.0;
        const int pick = weighted_pick(d2, chosen, eng);
        seeds.push_back(pick);
        chosen[pick] = 1;
        d2 = d2.cwiseMin(
            (rows.rowwise() - rows.row(pick)).rowwise().squaredNorm());
    }
    return seeds;
}

struct LloydOutcome {
    Eigen::MatrixXd centroids;
    std::vector<int> assignments;
    double inertia = 0.0;
    int iterations = 0;
};

// Hard Lloyd iterations with empty clusters re-seeded at the point farthest
// from its centroid. Deterministic tie-breaking to the lowest index.
inline LloydOutcome lloyd(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                          Eigen::MatrixXd centroids, int max_iter) {
    const int n = static_cast<int>(rows.rows());
    const int k = static_cast<int>(centroids.rows());
    LloydOutcome out;
    out.assignments.assign(n, 0);
    const Eigen::VectorXd row_norms = rows.rowwise().squaredNorm();

    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd cent_norms = centroids.rowwise().squaredNorm();
        Eigen::MatrixXd cross = rows * centroids.transpose();
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j) {
                const double d = row_norms[i] + cent_norms[j] - 2.0 * cross(i, j);
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            if (out.assignments[i] != best) {
                out.assignments[i] = best;
                changed = true;
            }
        }
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
        for (int i = 0; i < n; ++i) {
            sums.row(out.assignments[i]) += rows.row(i);
            counts[out.assignments[i]] += 1.0;
        }
        for (int j = 0; j < k; ++j) {
            if (counts[j] > 0.0) {
                centroids.row(j) = sums.row(j) / counts[j];
            } else {
                // Revive at the point currently farthest from its centroid.
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d =
                        (rows.row(i) - centroids.row(out.assignments[i]))
                            .squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centroids.row(j) = rows.row(far);
                changed = true;
            }
        }
        out.iterations = it + 1;
        if (!changed && it > 0) break;
    }

    out.inertia = 0.0;
    for (int i = 0; i < n; ++i) {
        out.inertia += (rows.row(i) - centroids.row(out.assignments[i])).squaredNorm();
    }
    out.centroids = std::move(centroids);
    return out;
}

}  // namespace rffkm::detail
