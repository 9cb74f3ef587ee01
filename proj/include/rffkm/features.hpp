#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "rffkm/common.hpp"

namespace rffkm {

// Gaussian (RBF) kernel exp(-||x-y||^2 / (2 sigma^2)). The bandwidth default
// follows the reference configuration for raw high-dimensional features;
// synthetic fixtures override it to match their own scale.
struct KernelSpec {
    double bandwidth = 1e3;
};

// A sampled random Fourier feature map for a shift-invariant kernel.
// `frequencies` is D x d with rows drawn i.i.d. from N(0, sigma^-2 I).
// Regenerating with the same (seed, D, d, sigma) reproduces it bit-exactly:
// sampling uses mt19937_64 plus an explicit Box-Muller transform instead of
// std::normal_distribution, whose output is implementation-defined.
struct RffMap {
    Eigen::MatrixXd frequencies;
    KernelSpec kernel;
    std::uint64_t seed = 0;

    int feature_dim() const { return static_cast<int>(frequencies.rows()); }
    int input_dim() const { return static_cast<int>(frequencies.cols()); }
};

double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y,
                       const KernelSpec& spec);

RffMap sample_rff(int input_dim, int feature_dim, const KernelSpec& spec,
                  std::uint64_t seed);

/// Maps the rows of X (n x d) to n x 2D. Row i is
/// sqrt(1/D) * (sin(w_1.x_i), cos(w_1.x_i), ..., sin(w_D.x_i), cos(w_D.x_i)),
/// so every mapped row has unit Euclidean norm and inner products of mapped
/// rows are unbiased estimates of the kernel.
Eigen::MatrixXd map_features(const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const RffMap& map);

/// Default RFF dimension for k clusters: ceil(4 * ln(2k)^3).
int recommended_dim(int k);

}  // namespace rffkm
