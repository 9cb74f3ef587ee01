#include "rffkm/oracles.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "kmeans_detail.hpp"
#include "rffkm/powermeans.hpp"
#include "rng_detail.hpp"

namespace rffkm {

namespace {

constexpr double kDistanceClamp = 1e-12;

void check_oracle_size(Eigen::Index n) {
    if (n > kOracleMaxN) {
        throw InvalidInput("oracle guard: n exceeds " +
                           std::to_string(kOracleMaxN));
    }
}

// Kernel-space k-means++ seeding followed by <= 10 hard Lloyd passes via the
// kernel trick; returns an initial column-stochastic membership matrix.
Eigen::MatrixXd kernel_init_membership(const Eigen::MatrixXd& K, int k,
                                       std::uint64_t seed) {
    const int n = static_cast<int>(K.rows());
    std::mt19937_64 eng(mix_seed(seed, 0x5eedu));

    std::vector<int> seeds;
    std::vector<char> chosen(n, 0);
    seeds.push_back(static_cast<int>(eng() % static_cast<std::uint64_t>(n)));
    chosen[seeds[0]] = 1;
    // ||phi(x_i) - phi(x_c)||^2 = K_ii + K_cc - 2 K_ic
    auto point_d2 = [&](int c) {
        return (K.diagonal().array() + K(c, c) - 2.0 * K.col(c).array())
            .matrix()
            .eval();
    };
    Eigen::VectorXd d2 = point_d2(seeds[0]);
    for (int j = 1; j < k; ++j) {
        for (int prev : seeds) d2[prev] = 0.0;
        const int pick = detail::weighted_pick(d2, chosen, eng);
        seeds.push_back(pick);
        chosen[pick] = 1;
        d2 = d2.cwiseMin(point_d2(pick));
    }

    std::vector<int> assign(n);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
            const double d = K(i, i) + K(seeds[j], seeds[j]) -
                             2.0 * K(i, seeds[j]);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        assign[i] = best;
    }

    for (int pass = 0; pass < 10; ++pass) {
        // d^2(i, mean_j) = K_ii - 2 mean_a K_ia + mean_ab K_ab over cluster j
        Eigen::MatrixXd member = Eigen::MatrixXd::Zero(n, k);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
        for (int i = 0; i < n; ++i) {
            member(i, assign[i]) = 1.0;
            counts[assign[i]] += 1.0;
        }
        for (int j = 0; j < k; ++j) {
            if (counts[j] == 0.0) {
                member(static_cast<int>(eng() % static_cast<std::uint64_t>(n)),
                       j) = 1.0;
                counts[j] += 1.0;
            }
            member.col(j) /= counts[j];
        }
        const Eigen::MatrixXd km = K * member;  // n x k
        const Eigen::VectorXd q =
            (member.transpose() * km).diagonal();  // mean pairwise term
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j) {
                const double d = K(i, i) + q[j] - 2.0 * km(i, j);
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
    }

    Eigen::MatrixXd member = Eigen::MatrixXd::Zero(n, k);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < n; ++i) {
        member(i, assign[i]) = 1.0;
        counts[assign[i]] += 1.0;
    }
    for (int j = 0; j < k; ++j) {
        if (counts[j] == 0.0) {
            member(static_cast<int>(eng() % static_cast<std::uint64_t>(n)), j) =
                1.0;
            counts[j] += 1.0;
        }
        member.col(j) /= counts[j];
    }
    return member;
}

Eigen::MatrixXd kernel_trick_distances(const Eigen::MatrixXd& K,
                                       const Eigen::MatrixXd& membership) {
    const Eigen::MatrixXd km = K * membership;  // n x k
    const Eigen::VectorXd q = (membership.transpose() * km).diagonal();
    Eigen::MatrixXd d2 = -2.0 * km;
    d2.colwise() += K.diagonal();
    d2.rowwise() += q.transpose();
    return d2.cwiseMax(kDistanceClamp);
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const KernelSpec& spec) {
    check_oracle_size(X.rows());
    if (!(spec.bandwidth > 0.0)) {
        throw InvalidInput("kernel_matrix: bandwidth must be positive");
    }
    const int n = static_cast<int>(X.rows());
    const Eigen::VectorXd norms = X.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * (X * X.transpose());
    d2.colwise() += norms;
    d2.rowwise() += norms.transpose();
    d2 = d2.cwiseMax(0.0);
    const double denom = 2.0 * spec.bandwidth * spec.bandwidth;
    Eigen::MatrixXd K = (-d2 / denom).array().exp();
    // Symmetrize away the GEMM round-off so tests can rely on exact symmetry.
    K = 0.5 * (K + K.transpose()).eval();
    for (int i = 0; i < n; ++i) K(i, i) = 1.0;
    return K;
}

ExactKpkmResult exact_kpkm(const Eigen::Ref<const Eigen::MatrixXd>& X, int k,
                           const KernelSpec& spec, const PowerSchedule& schedule,
                           std::uint64_t seed, double tol, int max_iter) {
    check_oracle_size(X.rows());
    const int n = static_cast<int>(X.rows());
    if (k < 1 || k > n) {
        throw InvalidInput("exact_kpkm: need 1 <= k <= n");
    }
    schedule.validate();
    const Eigen::MatrixXd K = kernel_matrix(X, spec);

    ExactKpkmResult result;
    Eigen::MatrixXd membership = kernel_init_membership(K, k, seed);
    double s = schedule.s0;
    double prev_objective = std::numeric_limits<double>::quiet_NaN();
    bool prev_same_s = false;

    for (int t = 1; t <= max_iter; ++t) {
        const Eigen::MatrixXd d2 = kernel_trick_distances(K, membership);
        Eigen::MatrixXd weights(n, k);
        bool saturated = true;
        for (int i = 0; i < n; ++i) {
            weights.row(i) =
                gradient_weights(d2.row(i).transpose(), s).transpose();
            if ((weights.row(i).array() > 0.0).count() > 1) saturated = false;
        }
        std::vector<char> taken(n, 0);
        for (int j = 0; j < k; ++j) {
            if (weights.col(j).sum() > 0.0) continue;
            const Eigen::VectorXd min_d = d2.rowwise().minCoeff();
            int pick = 0;
            double best = -1.0;
            for (int i = 0; i < n; ++i) {
                if (!taken[i] && min_d[i] > best) {
                    best = min_d[i];
                    pick = i;
                }
            }
            taken[pick] = 1;
            weights.col(j).setZero();
            weights(pick, j) = 1.0;
            result.dead_clusters.push_back({t, j, pick});
        }
        membership = weights.array().rowwise() / weights.colwise().sum().array();

        const Eigen::MatrixXd new_d2 = kernel_trick_distances(K, membership);
        double objective = 0.0;
        for (int i = 0; i < n; ++i) {
            objective += power_mean(new_d2.row(i).transpose(), s);
        }
        result.trace.push_back({t, s, objective});
        result.iterations = t;

        bool inner_converged = false;
        if (prev_same_s && std::isfinite(prev_objective)) {
            const double rel = std::abs(objective - prev_objective) /
                               std::max(std::abs(objective), 1e-12);
            inner_converged = rel < tol;
        }
        if (inner_converged && (s <= schedule.s_floor || saturated)) {
            result.converged = true;
            result.final_s = s;
            break;
        }
        const double next_s = schedule.advance(s, t);
        prev_same_s = (next_s == s);
        prev_objective = objective;
        s = next_s;
        result.final_s = s;
    }

    const Eigen::MatrixXd d2 = kernel_trick_distances(K, membership);
    result.assignments.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int j = 1; j < k; ++j) {
            if (d2(i, j) < d2(i, best)) best = j;
        }
        result.assignments[i] = best;
    }
    result.membership = std::move(membership);
    return result;
}

double kkm_cost_kernel(const Eigen::Ref<const Eigen::MatrixXd>& K,
                       const std::vector<int>& assignments) {
    check_oracle_size(K.rows());
    const int n = static_cast<int>(K.rows());
    if (static_cast<int>(assignments.size()) != n) {
        throw InvalidInput("kkm_cost_kernel: assignment length mismatch");
    }
    const int k =
        *std::max_element(assignments.begin(), assignments.end()) + 1;
    Eigen::MatrixXd indicator = Eigen::MatrixXd::Zero(n, k);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < n; ++i) {
        indicator(i, assignments[i]) = 1.0;
        counts[assignments[i]] += 1.0;
    }
    double cost = K.diagonal().sum();
    const Eigen::MatrixXd ki = K * indicator;  // n x k
    for (int j = 0; j < k; ++j) {
        if (counts[j] > 0.0) {
            cost -= indicator.col(j).dot(ki.col(j)) / counts[j];
        }
    }
    return std::max(cost, 0.0);
}

double kkm_cost_euclidean(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                          const std::vector<int>& assignments) {
    const int n = static_cast<int>(rows.rows());
    if (static_cast<int>(assignments.size()) != n) {
        throw InvalidInput("kkm_cost_euclidean: assignment length mismatch");
    }
    const int k =
        *std::max_element(assignments.begin(), assignments.end()) + 1;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < n; ++i) {
        sums.row(assignments[i]) += rows.row(i);
        counts[assignments[i]] += 1.0;
    }
    double cost = 0.0;
    for (int i = 0; i < n; ++i) {
        const int j = assignments[i];
        cost += (rows.row(i) - sums.row(j) / counts[j]).squaredNorm();
    }
    return cost;
}

BlobData make_blobs(int n, int k, int dim, double separation,
                    double noise_fraction, double outlier_scale,
                    std::uint64_t seed) {
    if (n < 1 || k < 1 || dim < 1 || k > n) {
        throw InvalidInput("make_blobs: need n >= k >= 1 and dim >= 1");
    }
    if (noise_fraction < 0.0 || noise_fraction >= 1.0) {
        throw InvalidInput("make_blobs: noise_fraction must be in [0,1)");
    }
    std::mt19937_64 eng(mix_seed(seed, 0xb10b5u));
    detail::NormalStream normal(mix_seed(seed, 0xb10b6u));

    // Rejection-sample centers until every pair is >= separation apart,
    // widening the candidate box if a configuration is hard to place.
    Eigen::MatrixXd centers(k, dim);
    double box = std::max(2.0 * separation, 1.0);
    int placed = 0;
    int attempts = 0;
    while (placed < k) {
        Eigen::RowVectorXd cand(dim);
        for (int d = 0; d < dim; ++d) {
            cand[d] = (2.0 * detail::uniform01(eng) - 1.0) * box;
        }
        bool ok = true;
        for (int j = 0; j < placed; ++j) {
            if ((centers.row(j) - cand).norm() < separation) {
                ok = false;
                break;
            }
        }
        if (ok) {
            centers.row(placed++) = cand;
        } else if (++attempts > 1000) {
            box *= 1.5;
            attempts = 0;
        }
    }

    BlobData out;
    const int n_outliers = static_cast<int>(noise_fraction * n);
    out.inlier_count = n - n_outliers;
    out.X.resize(n, dim);
    out.labels.assign(n, 0);
    for (int i = 0; i < out.inlier_count; ++i) {
        const int label = i % k;
        out.labels[i] = label;
        for (int d = 0; d < dim; ++d) {
            out.X(i, d) = centers(label, d) + normal.next();
        }
    }
    // Outliers occupy the tail, uniform at outlier_scale x the unit blob
    // radius; labeled by nearest center.
    for (int i = out.inlier_count; i < n; ++i) {
        for (int d = 0; d < dim; ++d) {
            out.X(i, d) = (2.0 * detail::uniform01(eng) - 1.0) * outlier_scale;
        }
        int nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
            const double dcen = (out.X.row(i) - centers.row(j)).squaredNorm();
            if (dcen < best) {
                best = dcen;
                nearest = j;
            }
        }
        out.labels[i] = nearest;
    }
    return out;
}

KmeansResult lloyd_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& X, int k,
                          std::uint64_t seed, int max_iter) {
    const int n = static_cast<int>(X.rows());
    if (k < 1 || k > n) {
        throw InvalidInput("lloyd_kmeans: need 1 <= k <= n");
    }
    std::mt19937_64 eng(mix_seed(seed, 0x5eedu));
    const auto seeds = detail::kmeanspp_seeds(X, k, eng);
    Eigen::MatrixXd centroids(k, X.cols());
    for (int j = 0; j < k; ++j) centroids.row(j) = X.row(seeds[j]);
    auto lloyd = detail::lloyd(X, std::move(centroids), max_iter);
    return {std::move(lloyd.centroids), std::move(lloyd.assignments),
            lloyd.inertia, lloyd.iterations};
}

KpkmResult power_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& X, int k,
                        const PowerSchedule& schedule, std::uint64_t seed,
                        double tol, int max_iter) {
    KpkmOptions opts;
    opts.k = k;
    opts.schedule = schedule;
    opts.seed = seed;
    opts.tol = tol;
    opts.max_iter = max_iter;
    return fit_kpkm_mapped(X, opts);
}

}  // namespace rffkm
