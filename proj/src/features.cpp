#include "rffkm/features.hpp"

#include <cmath>

#include "rng_detail.hpp"

namespace rffkm {

namespace {

void check_spec(const KernelSpec& spec) {
    if (!(spec.bandwidth > 0.0) || !std::isfinite(spec.bandwidth)) {
        throw InvalidInput("kernel bandwidth must be positive and finite");
    }
}

}  // namespace

double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y,
                       const KernelSpec& spec) {
    check_spec(spec);
    if (x.size() != y.size()) {
        throw InvalidInput("gaussian_kernel: dimension mismatch");
    }
    const double d2 = (x - y).squaredNorm();
    return std::exp(-d2 / (2.0 * spec.bandwidth * spec.bandwidth));
}

RffMap sample_rff(int input_dim, int feature_dim, const KernelSpec& spec,
                  std::uint64_t seed) {
    check_spec(spec);
    if (input_dim < 1 || feature_dim < 1) {
        throw InvalidInput("sample_rff: dimensions must be >= 1");
    }
    RffMap map;
    map.kernel = spec;
    map.seed = seed;
    map.frequencies.resize(feature_dim, input_dim);
    detail::NormalStream normal(seed);
    const double scale = 1.0 / spec.bandwidth;  // N(0, sigma^-2 I)
    for (int i = 0; i < feature_dim; ++i) {
        for (int j = 0; j < input_dim; ++j) {
            map.frequencies(i, j) = normal.next() * scale;
        }
    }
    return map;
}

Eigen::MatrixXd map_features(const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const RffMap& map) {
    if (X.cols() != map.input_dim()) {
        throw InvalidInput("map_features: data dimension does not match the map");
    }
    const int n = static_cast<int>(X.rows());
    const int D = map.feature_dim();
    const double scale = std::sqrt(1.0 / static_cast<double>(D));
    const Eigen::MatrixXd projections = X * map.frequencies.transpose();  // n x D
    Eigen::MatrixXd out(n, 2 * D);
    for (int m = 0; m < D; ++m) {
        out.col(2 * m) = projections.col(m).array().sin() * scale;
        out.col(2 * m + 1) = projections.col(m).array().cos() * scale;
    }
    return out;
}

int recommended_dim(int k) {
    if (k < 1) {
        throw InvalidInput("recommended_dim: k must be >= 1");
    }
    const double l = std::log(2.0 * static_cast<double>(k));
    return static_cast<int>(std::ceil(4.0 * l * l * l));
}

}  // namespace rffkm
