#pragma once

#include <vector>

#include "rffkm/common.hpp"

namespace rffkm {

/// Clustering accuracy: the best fraction of agreeing labels over injective
/// cluster-to-class maps, solved exactly on the (padded) confusion matrix.
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

/// Normalized mutual information I(pred;truth)/sqrt(H(pred) H(truth)) with
/// natural logs; 0 when either marginal entropy is zero.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);

/// Mean over predicted clusters of the majority true-class fraction.
double purity(const std::vector<int>& pred, const std::vector<int>& truth);

/// Maps arbitrary integer labels onto 0..c-1 in order of first appearance.
std::vector<int> dense_relabel(const std::vector<int>& labels);

/// Minimum-cost assignment on a rectangular cost matrix (rows to columns,
/// rows.size() <= cols assumed after padding by the caller). Returns for each
/// row the matched column. Exposed for reuse in centroid-matching tests.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace rffkm
