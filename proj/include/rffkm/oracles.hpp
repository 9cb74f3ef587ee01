#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rffkm/features.hpp"
#include "rffkm/kpkm.hpp"

namespace rffkm {

// Reference implementations that pay the O(n^2) kernel-matrix price. They
// exist to cross-check the RFF solvers at small n and are hard-guarded
// against accidental large runs.

inline constexpr int kOracleMaxN = 2000;

/// Dense Gaussian kernel matrix; n <= 2000 enforced.
Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const KernelSpec& spec);

struct ExactKpkmResult {
    Eigen::MatrixXd membership;
    std::vector<TracePoint> trace;
    std::vector<DeadClusterEvent> dead_clusters;
    std::vector<int> assignments;
    int iterations = 0;
    bool converged = false;
    double final_s = 0.0;
};

/// Kernel-trick twin of fit_kpkm: identical iteration structure, distances
/// expanded as K_ii + W_j' K W_j - 2 (K W_j)_i, no RFF anywhere.
ExactKpkmResult exact_kpkm(const Eigen::Ref<const Eigen::MatrixXd>& X, int k,
                           const KernelSpec& spec, const PowerSchedule& schedule,
                           std::uint64_t seed, double tol = 1e-6,
                           int max_iter = 300);

/// Kernel k-means cost of a partition: sum over points of the squared
/// distance to its cluster mean in kernel feature space.
double kkm_cost_kernel(const Eigen::Ref<const Eigen::MatrixXd>& K,
                       const std::vector<int>& assignments);

/// Same cost evaluated on explicit (mapped or raw) row vectors.
double kkm_cost_euclidean(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                          const std::vector<int>& assignments);

struct BlobData {
    Eigen::MatrixXd X;
    std::vector<int> labels;
    int inlier_count = 0;  // outliers occupy rows [inlier_count, n)
};

/// k isotropic unit-radius Gaussian blobs with centers at pairwise distance
/// >= separation, plus an optional tail of uniform outliers at
/// outlier_scale x the data extent (labeled by nearest center).
BlobData make_blobs(int n, int k, int dim, double separation,
                    double noise_fraction, double outlier_scale,
                    std::uint64_t seed);

struct KmeansResult {
    Eigen::MatrixXd centroids;
    std::vector<int> assignments;
    double inertia = 0.0;
    int iterations = 0;
};

/// Plain Lloyd k-means with k-means++ seeding (Euclidean baseline).
KmeansResult lloyd_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& X, int k,
                          std::uint64_t seed, int max_iter = 100);

/// Power k-means baseline: the annealed power-mean loop on raw coordinates.
KpkmResult power_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& X, int k,
                        const PowerSchedule& schedule, std::uint64_t seed,
                        double tol = 1e-6, int max_iter = 300);

}  // namespace rffkm
