#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rffkm/features.hpp"
#include "rffkm/kpkm.hpp"
#include "rffkm/powermeans.hpp"

namespace rffkm {

struct MkpkmOptions {
    int k = 2;
    std::vector<int> rff_dims;  // per view; empty -> recommended_dim(k) each
    double fuzziness = 2.0;     // m > 1
    double lambda = 1.0;        // entropy regularization > 0
    PowerSchedule schedule{-15.0, 1.04, 2, -1e6};
    std::uint64_t seed = 0;
    double tol = 1e-6;
    int max_iter = 300;
    bool refresh_eta = false;       // recompute eta each sweep (default: frozen)
    bool freeze_typicality = false; // ablation: U pinned at 1 (non-possibilistic)
};

// Everything the alternating updates read and write. `centroids[l]` is
// k x 2D_l, `typicality` (U) and `fuzzy_weights` (W) are n x k, `eta` is
// k x L, `view_weights` (alpha) lives on the simplex.
struct MkpkmState {
    std::vector<Eigen::MatrixXd> centroids;
    Eigen::MatrixXd typicality;
    Eigen::VectorXd view_weights;
    Eigen::MatrixXd fuzzy_weights;
    Eigen::MatrixXd eta;
    double s = -1.0;
    double fuzziness = 2.0;
};

struct MkpkmTracePoint {
    int iteration = 0;
    double s = 0.0;
    double objective = 0.0;
    Eigen::VectorXd view_weights;
};

struct MkpkmResult {
    MkpkmState state;
    std::vector<Eigen::MatrixXd> mapped;  // per-view mapped features
    std::vector<MkpkmTracePoint> trace;
    std::vector<DeadClusterEvent> dead_clusters;
    std::vector<int> assignments;  // argmax_j w_ij u_ij^m, ties to lowest index
    int iterations = 0;
    bool converged = false;
};

/// Possibilistic distance u^m ||phi_l(x_i) - theta_{j,l}||^2 + (1-u)^m eta_{j,l}.
double weighted_distance(const std::vector<Eigen::MatrixXd>& mapped,
                         const MkpkmState& state, int i, int j, int l);

/// All L weighted-distance matrices (each n x k).
std::vector<Eigen::MatrixXd> weighted_distance_matrices(
    const std::vector<Eigen::MatrixXd>& mapped, const MkpkmState& state);

/// Per-row aggregated distances sum_l alpha_l * dist_l, clamped at 1e-12.
Eigen::MatrixXd aggregate_distances(const std::vector<Eigen::MatrixXd>& dist,
                                    const Eigen::VectorXd& view_weights);

/// Step 1: closed-form typicality update
/// u_ij = 1 / (1 + (A_ij / B_j)^(1/(m-1))) with A the alpha-weighted squared
/// distances and B_j the alpha-weighted eta row.
Eigen::MatrixXd update_typicality(const std::vector<Eigen::MatrixXd>& mapped,
                                  const MkpkmState& state);

struct CentroidUpdate {
    std::vector<Eigen::MatrixXd> centroids;
    std::vector<int> reseeded;
};

/// Step 2: per-view combined-membership means with gamma_ij = w_ij u_ij^m.
CentroidUpdate update_centroids(const std::vector<Eigen::MatrixXd>& mapped,
                                const MkpkmState& state);

/// Step 3: alpha_l = softmax_l(-C_l / lambda), C_l = sum_ij w_ij d~_ij,l,
/// computed with a max shift; the result is clamped away from exact zero so
/// the entropy term stays finite.
Eigen::VectorXd update_view_weights(const std::vector<Eigen::MatrixXd>& mapped,
                                    const MkpkmState& state, double lambda);

/// Row-wise power-mean gradient weights on the aggregated distances.
Eigen::MatrixXd compute_fuzzy_weights(const std::vector<Eigen::MatrixXd>& mapped,
                                      const MkpkmState& state, double s);

/// Objective: sum_i M_s(aggregated row) + lambda * sum_l alpha_l ln alpha_l.
double mkpkm_objective(const std::vector<Eigen::MatrixXd>& mapped,
                       const MkpkmState& state, double lambda);

/// Majorizing surrogate evaluated at `eval`, expanded around `expansion`
/// (whose fuzzy_weights must be current). Equals the objective when
/// eval == expansion and dominates it elsewhere.
double mkpkm_surrogate(const std::vector<Eigen::MatrixXd>& mapped,
                       const MkpkmState& expansion, const MkpkmState& eval,
                       double lambda);

MkpkmResult fit_mkpkm(const std::vector<Eigen::MatrixXd>& views,
                      const std::vector<KernelSpec>& specs,
                      const MkpkmOptions& opts);

/// Variant that skips the RFF mapping (views are used as-is).
MkpkmResult fit_mkpkm_mapped(const std::vector<Eigen::MatrixXd>& mapped_views,
                             const MkpkmOptions& opts);

}  // namespace rffkm
