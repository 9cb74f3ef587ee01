#include "rffkm/mkpkm.hpp"

#include <cmath>
#include <limits>

#include "kmeans_detail.hpp"

namespace rffkm {

namespace {

constexpr double kDistanceClamp = 1e-12;
constexpr double kDenominatorFloor = 1e-30;

void validate_views(const std::vector<Eigen::MatrixXd>& views) {
    if (views.empty()) {
        throw InvalidInput("mkpkm: need at least one view");
    }
    const Eigen::Index n = views[0].rows();
    for (std::size_t l = 0; l < views.size(); ++l) {
        if (views[l].rows() != n) {
            throw InvalidInput("mkpkm: views disagree on the sample count");
        }
        if (views[l].rows() == 0 || views[l].cols() == 0) {
            throw InvalidInput("mkpkm: empty view");
        }
        if (!views[l].allFinite()) {
            throw InvalidInput("mkpkm: non-finite entries in a view");
        }
    }
}

// Raw squared distances per view (no possibilistic terms).
std::vector<Eigen::MatrixXd> view_distances(
    const std::vector<Eigen::MatrixXd>& mapped, const MkpkmState& state) {
    std::vector<Eigen::MatrixXd> d2;
    d2.reserve(mapped.size());
    for (std::size_t l = 0; l < mapped.size(); ++l) {
        d2.push_back(squared_distances(mapped[l], state.centroids[l]));
    }
    return d2;
}

}  // namespace

double weighted_distance(const std::vector<Eigen::MatrixXd>& mapped,
                         const MkpkmState& state, int i, int j, int l) {
    const double u = state.typicality(i, j);
    const double m = state.fuzziness;
    const double q =
        (mapped[l].row(i) - state.centroids[l].row(j)).squaredNorm();
    return std::pow(u, m) * q + std::pow(1.0 - u, m) * state.eta(j, l);
}

std::vector<Eigen::MatrixXd> weighted_distance_matrices(
    const std::vector<Eigen::MatrixXd>& mapped, const MkpkmState& state) {
    const double m = state.fuzziness;
    const Eigen::ArrayXXd um = state.typicality.array().pow(m);
    const Eigen::ArrayXXd cm = (1.0 - state.typicality.array()).pow(m);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(mapped.size());
    const auto d2 = view_distances(mapped, state);
    for (std::size_t l = 0; l < mapped.size(); ++l) {
        Eigen::ArrayXXd eta_term =
            cm.rowwise() * state.eta.col(l).transpose().array();
        out.push_back((um * d2[l].array() + eta_term).matrix());
    }
    return out;
}

Eigen::MatrixXd aggregate_distances(const std::vector<Eigen::MatrixXd>& dist,
                                    const Eigen::VectorXd& view_weights) {
    Eigen::MatrixXd agg =
        Eigen::MatrixXd::Zero(dist[0].rows(), dist[0].cols());
    for (std::size_t l = 0; l < dist.size(); ++l) {
        agg += view_weights[static_cast<Eigen::Index>(l)] * dist[l];
    }
    return agg.cwiseMax(kDistanceClamp);
}

Eigen::MatrixXd update_typicality(const std::vector<Eigen::MatrixXd>& mapped,
                                  const MkpkmState& state) {
    const auto d2 = view_distances(mapped, state);
    const Eigen::Index n = mapped[0].rows();
    const Eigen::Index k = state.centroids[0].rows();
    // A = alpha-weighted squared distances, B_j = alpha-weighted eta row.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, k);
    for (std::size_t l = 0; l < mapped.size(); ++l) {
        a += state.view_weights[static_cast<Eigen::Index>(l)] * d2[l];
    }
    a = a.cwiseMax(kDistanceClamp);
    const Eigen::VectorXd b = state.eta * state.view_weights;  // k
    const double inv_m1 = 1.0 / (state.fuzziness - 1.0);
    Eigen::MatrixXd u(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        u.col(j) = (1.0 + (a.col(j).array() / b[j]).pow(inv_m1)).inverse();
    }
    return u;
}

CentroidUpdate update_centroids(const std::vector<Eigen::MatrixXd>& mapped,
                                const MkpkmState& state) {
    const Eigen::Index n = mapped[0].rows();
    const Eigen::Index k = state.centroids[0].rows();
    const Eigen::MatrixXd gamma =
        state.fuzzy_weights.array() *
        state.typicality.array().pow(state.fuzziness);
    const Eigen::VectorXd denom = gamma.colwise().sum();

    CentroidUpdate update;
    update.centroids.reserve(mapped.size());
    for (std::size_t l = 0; l < mapped.size(); ++l) {
        update.centroids.push_back(
            Eigen::MatrixXd::Zero(k, mapped[l].cols()));
    }

    // Dead clusters revive at the point with the largest aggregated minimum
    // distance, mirroring the single-view solver.
    std::vector<int> dead;
    for (Eigen::Index j = 0; j < k; ++j) {
        if (denom[j] <= kDenominatorFloor) dead.push_back(static_cast<int>(j));
    }
    std::vector<int> revival_points;
    if (!dead.empty()) {
        const auto dist = weighted_distance_matrices(mapped, state);
        const Eigen::VectorXd min_d =
            aggregate_distances(dist, state.view_weights).rowwise().minCoeff();
        std::vector<char> taken(n, 0);
        for (std::size_t idx = 0; idx < dead.size(); ++idx) {
            int pick = -1;
            double best = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!taken[i] && min_d[i] > best) {
                    best = min_d[i];
                    pick = static_cast<int>(i);
                }
            }
            if (pick < 0) pick = 0;
            taken[pick] = 1;
            revival_points.push_back(pick);
        }
    }

    for (std::size_t l = 0; l < mapped.size(); ++l) {
        Eigen::MatrixXd sums = gamma.transpose() * mapped[l];  // k x 2D_l
        for (Eigen::Index j = 0; j < k; ++j) {
            if (denom[j] > kDenominatorFloor) {
                update.centroids[l].row(j) = sums.row(j) / denom[j];
            }
        }
    }
    for (std::size_t idx = 0; idx < dead.size(); ++idx) {
        const int j = dead[idx];
        const int point = revival_points[idx];
        for (std::size_t l = 0; l < mapped.size(); ++l) {
            update.centroids[l].row(j) = mapped[l].row(point);
        }
        update.reseeded.push_back(j);
    }
    return update;
}

Eigen::VectorXd update_view_weights(const std::vector<Eigen::MatrixXd>& mapped,
                                    const MkpkmState& state, double lambda) {
    if (!(lambda > 0.0)) {
        throw InvalidInput("update_view_weights: lambda must be positive");
    }
    const auto dist = weighted_distance_matrices(mapped, state);
    const Eigen::Index L = static_cast<Eigen::Index>(dist.size());
    Eigen::VectorXd z(L);
    for (Eigen::Index l = 0; l < L; ++l) {
        const double c =
            (state.fuzzy_weights.array() * dist[l].array()).sum();
        z[l] = -c / lambda;
    }
    z.array() -= z.maxCoeff();  // overflow-safe softmax
    Eigen::VectorXd alpha = z.array().exp();
    alpha /= alpha.sum();
    // Keep every weight strictly positive so alpha*ln(alpha) stays finite.
    alpha = alpha.cwiseMax(std::numeric_limits<double>::min());
    alpha /= alpha.sum();
    return alpha;
}

Eigen::MatrixXd compute_fuzzy_weights(const std::vector<Eigen::MatrixXd>& mapped,
                                      const MkpkmState& state, double s) {
    const auto dist = weighted_distance_matrices(mapped, state);
    const Eigen::MatrixXd agg = aggregate_distances(dist, state.view_weights);
    Eigen::MatrixXd w(agg.rows(), agg.cols());
    for (Eigen::Index i = 0; i < agg.rows(); ++i) {
        w.row(i) = gradient_weights(agg.row(i).transpose(), s).transpose();
    }
    return w;
}

double mkpkm_objective(const std::vector<Eigen::MatrixXd>& mapped,
                       const MkpkmState& state, double lambda) {
    const auto dist = weighted_distance_matrices(mapped, state);
    const Eigen::MatrixXd agg = aggregate_distances(dist, state.view_weights);
    double total = 0.0;
    for (Eigen::Index i = 0; i < agg.rows(); ++i) {
        total += power_mean(agg.row(i).transpose(), state.s);
    }
    for (Eigen::Index l = 0; l < state.view_weights.size(); ++l) {
        total += lambda * state.view_weights[l] * std::log(state.view_weights[l]);
    }
    return total;
}

double mkpkm_surrogate(const std::vector<Eigen::MatrixXd>& mapped,
                       const MkpkmState& expansion, const MkpkmState& eval,
                       double lambda) {
    auto linear_term = [&](const MkpkmState& at) {
        const auto dist = weighted_distance_matrices(mapped, at);
        const Eigen::MatrixXd agg = aggregate_distances(dist, at.view_weights);
        double value =
            (expansion.fuzzy_weights.array() * agg.array()).sum();
        for (Eigen::Index l = 0; l < at.view_weights.size(); ++l) {
            value += lambda * at.view_weights[l] * std::log(at.view_weights[l]);
        }
        return value;
    };
    const double f_expansion = mkpkm_objective(mapped, expansion, lambda);
    return f_expansion - linear_term(expansion) + linear_term(eval);
}

MkpkmResult fit_mkpkm_mapped(const std::vector<Eigen::MatrixXd>& mapped_views,
                             const MkpkmOptions& opts) {
    validate_views(mapped_views);
    const int n = static_cast<int>(mapped_views[0].rows());
    const int L = static_cast<int>(mapped_views.size());
    if (opts.k < 1 || opts.k > n) {
        throw InvalidInput("fit_mkpkm: need 1 <= k <= n");
    }
    if (!(opts.fuzziness > 1.0)) {
        throw InvalidInput("fit_mkpkm: fuzziness must be > 1");
    }
    if (!(opts.lambda > 0.0)) {
        throw InvalidInput("fit_mkpkm: lambda must be positive");
    }
    if (!(opts.tol > 0.0)) {
        throw InvalidInput("fit_mkpkm: tol must be positive");
    }
    opts.schedule.validate();

    MkpkmResult result;
    result.mapped = mapped_views;
    MkpkmState& state = result.state;
    state.fuzziness = opts.fuzziness;
    state.view_weights =
        Eigen::VectorXd::Constant(L, 1.0 / static_cast<double>(L));

    // Joint initialization: one k-means++ pass on the alpha-weighted
    // concatenation so index j names the same cluster in every view.
    Eigen::Index total_cols = 0;
    for (const auto& v : mapped_views) total_cols += v.cols();
    Eigen::MatrixXd concat(n, total_cols);
    Eigen::Index offset = 0;
    for (int l = 0; l < L; ++l) {
        concat.middleCols(offset, mapped_views[l].cols()) =
            std::sqrt(state.view_weights[l]) * mapped_views[l];
        offset += mapped_views[l].cols();
    }
    const Eigen::MatrixXd joint = init_centroids(concat, opts.k, opts.seed);
    offset = 0;
    state.centroids.clear();
    for (int l = 0; l < L; ++l) {
        state.centroids.push_back(
            joint.middleCols(offset, mapped_views[l].cols()) /
            std::sqrt(state.view_weights[l]));
        offset += mapped_views[l].cols();
    }

    // eta_{j,l} = mean_i ||phi_l(x_i) - theta0_{j,l}||^2, frozen unless asked.
    auto compute_eta = [&]() {
        Eigen::MatrixXd eta(opts.k, L);
        for (int l = 0; l < L; ++l) {
            eta.col(l) = squared_distances(mapped_views[l], state.centroids[l])
                             .colwise()
                             .mean()
                             .transpose();
        }
        return eta;
    };
    state.eta = compute_eta();
    state.typicality = Eigen::MatrixXd::Constant(
        n, opts.k, opts.freeze_typicality ? 1.0 : 0.5);
    state.s = opts.schedule.s0;

    double prev_objective = std::numeric_limits<double>::quiet_NaN();
    bool prev_same_s = false;

    for (int t = 1; t <= opts.max_iter; ++t) {
        state.fuzzy_weights = compute_fuzzy_weights(mapped_views, state, state.s);
        bool saturated = true;
        for (Eigen::Index i = 0; i < state.fuzzy_weights.rows() && saturated; ++i) {
            if ((state.fuzzy_weights.row(i).array() > 0.0).count() > 1) {
                saturated = false;
            }
        }
        if (!opts.freeze_typicality) {
            state.typicality = update_typicality(mapped_views, state);
        }
        CentroidUpdate update = update_centroids(mapped_views, state);
        state.centroids = std::move(update.centroids);
        for (int j : update.reseeded) {
            result.dead_clusters.push_back({t, j, 0});
        }
        if (opts.refresh_eta) {
            state.eta = compute_eta();
        }
        state.view_weights =
            update_view_weights(mapped_views, state, opts.lambda);

        const double objective = mkpkm_objective(mapped_views, state, opts.lambda);
        result.trace.push_back({t, state.s, objective, state.view_weights});
        result.iterations = t;

        bool inner_converged = false;
        if (prev_same_s && std::isfinite(prev_objective)) {
            const double rel = std::abs(objective - prev_objective) /
                               std::max(std::abs(objective), 1e-12);
            inner_converged = rel < opts.tol;
        }
        if (inner_converged &&
            (state.s <= opts.schedule.s_floor || saturated)) {
            result.converged = true;
            break;
        }

        const double next_s = opts.schedule.advance(state.s, t);
        prev_same_s = (next_s == state.s);
        prev_objective = objective;
        state.s = next_s;
    }

    // Final combined membership gamma = W o U^m at the final state.
    state.fuzzy_weights = compute_fuzzy_weights(mapped_views, state, state.s);
    const Eigen::MatrixXd gamma =
        state.fuzzy_weights.array() *
        state.typicality.array().pow(state.fuzziness);
    result.assignments.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int j = 1; j < opts.k; ++j) {
            if (gamma(i, j) > gamma(i, best)) best = j;
        }
        result.assignments[i] = best;
    }
    return result;
}

MkpkmResult fit_mkpkm(const std::vector<Eigen::MatrixXd>& views,
                      const std::vector<KernelSpec>& specs,
                      const MkpkmOptions& opts) {
    validate_views(views);
    const int L = static_cast<int>(views.size());
    if (specs.size() != views.size() && specs.size() != 1) {
        throw InvalidInput("fit_mkpkm: provide one KernelSpec per view (or one shared)");
    }
    if (!opts.rff_dims.empty() &&
        static_cast<int>(opts.rff_dims.size()) != L) {
        throw InvalidInput("fit_mkpkm: rff_dims must be empty or one per view");
    }
    // Every view draws its frequencies from the same root seed, so identical
    // views map identically and tie symmetries (uniform alpha) hold exactly.
    std::vector<Eigen::MatrixXd> mapped;
    mapped.reserve(L);
    for (int l = 0; l < L; ++l) {
        const KernelSpec& spec = (specs.size() == 1) ? specs[0] : specs[l];
        const int dim = opts.rff_dims.empty() ? recommended_dim(opts.k)
                                              : opts.rff_dims[l];
        const RffMap map = sample_rff(static_cast<int>(views[l].cols()), dim,
                                      spec, mix_seed(opts.seed, 0xfeedULL));
        mapped.push_back(map_features(views[l], map));
    }
    return fit_mkpkm_mapped(mapped, opts);
}

}  // namespace rffkm
