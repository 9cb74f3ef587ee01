#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rffkm/features.hpp"
#include "rffkm/powermeans.hpp"

namespace rffkm {

// A cluster whose weight column collapsed to zero and was re-seeded at the
// mapped point with the largest current minimum distance.
struct DeadClusterEvent {
    int iteration = 0;
    int cluster = 0;
    int reseeded_point = 0;
};

struct TracePoint {
    int iteration = 0;
    double s = 0.0;
    double objective = 0.0;
};

struct KpkmOptions {
    int k = 2;
    int rff_dim = 0;  // 0 -> recommended_dim(k)
    KernelSpec kernel{};
    PowerSchedule schedule{};
    std::uint64_t seed = 0;
    double tol = 1e-6;
    int max_iter = 300;
};

struct KpkmResult {
    Eigen::MatrixXd membership;  // n x k, nonnegative, columns sum to 1
    Eigen::MatrixXd centroids;   // k x 2D rows in mapped space
    std::vector<TracePoint> trace;
    std::vector<DeadClusterEvent> dead_clusters;
    std::vector<int> assignments;  // nearest centroid, ties to lowest index
    int iterations = 0;
    bool converged = false;
    double final_s = 0.0;
};

/// k-means++ seeding on the mapped rows followed by at most 10 Lloyd
/// iterations; deterministic for a given seed.
Eigen::MatrixXd init_centroids(const Eigen::Ref<const Eigen::MatrixXd>& mapped,
                               int k, std::uint64_t seed);

struct KpkmStep {
    Eigen::MatrixXd membership;  // column-stochastic W
    Eigen::MatrixXd centroids;   // k x 2D updated centroids
    std::vector<std::pair<int, int>> reseeded;  // (cluster, point) revivals
    bool weights_saturated = false;  // every row one-hot after flushing
};

/// One W/Theta pass: row-wise power-mean gradient weights on clamped squared
/// distances, column normalization, then centroids as the W-weighted means.
KpkmStep kpkm_step(const Eigen::Ref<const Eigen::MatrixXd>& mapped,
                   const Eigen::Ref<const Eigen::MatrixXd>& centroids,
                   double s);

/// f_s(W): sum over rows of M_s of squared distances to the centroids
/// implied by W (each centroid a convex combination of mapped rows).
double kpkm_objective(const Eigen::Ref<const Eigen::MatrixXd>& mapped,
                      const Eigen::Ref<const Eigen::MatrixXd>& membership,
                      double s);

/// Full single-view solve in an already-mapped (or plain Euclidean) space.
KpkmResult fit_kpkm_mapped(const Eigen::Ref<const Eigen::MatrixXd>& mapped,
                           const KpkmOptions& opts);

/// RFF map + fit_kpkm_mapped. Never materializes anything n x n; the
/// per-iteration cost is O(n (k + d) D).
KpkmResult fit_kpkm(const Eigen::Ref<const Eigen::MatrixXd>& X,
                    const KpkmOptions& opts);

/// Squared point-to-centroid distances, clamped below at 1e-12.
Eigen::MatrixXd squared_distances(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                  const Eigen::Ref<const Eigen::MatrixXd>& centroids);

std::vector<int> nearest_assignments(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                     const Eigen::Ref<const Eigen::MatrixXd>& centroids);

}  // namespace rffkm
