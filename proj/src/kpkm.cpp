#include "rffkm/kpkm.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "kmeans_detail.hpp"

namespace rffkm {

namespace {

constexpr double kDistanceClamp = 1e-12;

void check_matrix_finite(const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const char* what) {
    if (!X.allFinite()) {
        throw InvalidInput(std::string(what) + ": non-finite entries");
    }
}

// Re-seeds each dead column at the point with the largest current minimum
// distance, skipping points already used for a revival this step.
void revive_dead_columns(const Eigen::Ref<const Eigen::MatrixXd>& d2,
                         Eigen::MatrixXd& weights,
                         std::vector<std::pair<int, int>>& reseeded) {
    const int n = static_cast<int>(weights.rows());
    const int k = static_cast<int>(weights.cols());
    std::vector<char> taken(n, 0);
    for (int j = 0; j < k; ++j) {
        if (weights.col(j).sum() > 0.0) continue;
        Eigen::VectorXd min_d = d2.rowwise().minCoeff();
        int pick = -1;
        double best = -1.0;
        for (int i = 0; i < n; ++i) {
            if (!taken[i] && min_d[i] > best) {
                best = min_d[i];
                pick = i;
            }
        }
        if (pick < 0) pick = 0;
        taken[pick] = 1;
        weights.col(j).setZero();
        weights(pick, j) = 1.0;
        reseeded.emplace_back(j, pick);
    }
}

}  // namespace

Eigen::MatrixXd squared_distances(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                  const Eigen::Ref<const Eigen::MatrixXd>& centroids) {
    const Eigen::VectorXd rn = rows.rowwise().squaredNorm();
    const Eigen::VectorXd cn = centroids.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * (rows * centroids.transpose());
    d2.colwise() += rn;
    d2.rowwise() += cn.transpose();
    return d2.cwiseMax(kDistanceClamp);
}

std::vector<int> nearest_assignments(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                     const Eigen::Ref<const Eigen::MatrixXd>& centroids) {
    const Eigen::MatrixXd d2 = squared_distances(rows, centroids);
    std::vector<int> out(rows.rows());
    for (Eigen::Index i = 0; i < d2.rows(); ++i) {
        int best = 0;
        for (Eigen::Index j = 1; j < d2.cols(); ++j) {
            if (d2(i, j) < d2(i, best)) best = static_cast<int>(j);
        }
        out[i] = best;
    }
    return out;
}

Eigen::MatrixXd init_centroids(const Eigen::Ref<const Eigen::MatrixXd>& mapped,
                               int k, std::uint64_t seed) {
    const int n = static_cast<int>(mapped.rows());
    if (k < 1 || k > n) {
        throw InvalidInput("init_centroids: need 1 <= k <= n");
    }
    std::mt19937_64 eng(mix_seed(seed, 0x5eedu));
    const auto seeds = detail::kmeanspp_seeds(mapped, k, eng);
    Eigen::MatrixXd centroids(k, mapped.cols());
    for (int j = 0; j < k; ++j) {
        centroids.row(j) = mapped.row(seeds[j]);
    }
    return detail::lloyd(mapped, std::move(centroids), 10).centroids;
}

KpkmStep kpkm_step(const Eigen::Ref<const Eigen::MatrixXd>& mapped,
                   const Eigen::Ref<const Eigen::MatrixXd>& centroids,
                   double s) {
    if (!(s < 0.0)) {
        throw InvalidInput("kpkm_step: s must be negative");
    }
    const int n = static_cast<int>(mapped.rows());
    const int k = static_cast<int>(centroids.rows());
    const Eigen::MatrixXd d2 = squared_distances(mapped, centroids);

    KpkmStep step;
    Eigen::MatrixXd weights(n, k);
    step.weights_saturated = true;
    for (int i = 0; i < n; ++i) {
        weights.row(i) = gradient_weights(d2.row(i).transpose(), s).transpose();
        if ((weights.row(i).array() > 0.0).count() > 1) {
            step.weights_saturated = false;
        }
    }
    revive_dead_columns(d2, weights, step.reseeded);

    step.membership = weights.array().rowwise() /
                      weights.colwise().sum().array();
    step.centroids = step.membership.transpose() * mapped;
    return step;
}

double kpkm_objective(const Eigen::Ref<const Eigen::MatrixXd>& mapped,
                      const Eigen::Ref<const Eigen::MatrixXd>& membership,
                      double s) {
    const Eigen::MatrixXd centroids = membership.transpose() * mapped;
    const Eigen::MatrixXd d2 = squared_distances(mapped, centroids);
    double total = 0.0;
    for (Eigen::Index i = 0; i < d2.rows(); ++i) {
        total += power_mean(d2.row(i).transpose(), s);
    }
    return total;
}

KpkmResult fit_kpkm_mapped(const Eigen::Ref<const Eigen::MatrixXd>& mapped,
                           const KpkmOptions& opts) {
    const int n = static_cast<int>(mapped.rows());
    if (n == 0 || mapped.cols() == 0) {
        throw InvalidInput("fit_kpkm: empty input");
    }
    if (opts.k < 1 || opts.k > n) {
        throw InvalidInput("fit_kpkm: need 1 <= k <= n");
    }
    if (!(opts.tol > 0.0)) {
        throw InvalidInput("fit_kpkm: tol must be positive");
    }
    check_matrix_finite(mapped, "fit_kpkm");
    opts.schedule.validate();

    KpkmResult result;
    Eigen::MatrixXd centroids = init_centroids(mapped, opts.k, opts.seed);
    double s = opts.schedule.s0;
    double prev_objective = std::numeric_limits<double>::quiet_NaN();
    bool prev_same_s = false;

    for (int t = 1; t <= opts.max_iter; ++t) {
        KpkmStep step = kpkm_step(mapped, centroids, s);
        centroids = step.centroids;
        result.membership = std::move(step.membership);
        for (const auto& [cluster, point] : step.reseeded) {
            result.dead_clusters.push_back({t, cluster, point});
        }
        const double objective = kpkm_objective(mapped, result.membership, s);
        result.trace.push_back({t, s, objective});
        result.iterations = t;

        bool inner_converged = false;
        if (prev_same_s && std::isfinite(prev_objective)) {
            const double rel = std::abs(objective - prev_objective) /
                               std::max(std::abs(objective), 1e-12);
            inner_converged = rel < opts.tol;
        }
        // Outer exhaustion: the floor was reached, or every row's weights
        // are already one-hot, which further annealing cannot change.
        if (inner_converged &&
            (s <= opts.schedule.s_floor || step.weights_saturated)) {
            result.converged = true;
            result.final_s = s;
            break;
        }

        const double next_s = opts.schedule.advance(s, t);
        prev_same_s = (next_s == s);
        prev_objective = objective;
        s = next_s;
        result.final_s = s;
    }

    result.centroids = centroids;
    result.assignments = nearest_assignments(mapped, centroids);
    return result;
}

KpkmResult fit_kpkm(const Eigen::Ref<const Eigen::MatrixXd>& X,
                    const KpkmOptions& opts) {
    check_matrix_finite(X, "fit_kpkm");
    const int dim = (opts.rff_dim > 0) ? opts.rff_dim : recommended_dim(opts.k);
    const RffMap map =
        sample_rff(static_cast<int>(X.cols()), dim, opts.kernel, opts.seed);
    return fit_kpkm_mapped(map_features(X, map), opts);
}

}  // namespace rffkm
