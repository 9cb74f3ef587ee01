#include "rffkm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <vector>

namespace rffkm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_lengths(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) {
        throw InvalidInput("label vectors have different lengths");
    }
    if (pred.empty()) {
        throw InvalidInput("label vectors are empty");
    }
}

// Confusion counts after dense relabeling; rows = pred clusters, cols = classes.
std::vector<std::vector<double>> confusion(const std::vector<int>& pred,
                                           const std::vector<int>& truth,
                                           int* out_k, int* out_c) {
    const auto p = dense_relabel(pred);
    const auto t = dense_relabel(truth);
    const int k = *std::max_element(p.begin(), p.end()) + 1;
    const int c = *std::max_element(t.begin(), t.end()) + 1;
    std::vector<std::vector<double>> m(k, std::vector<double>(c, 0.0));
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[p[i]][t[i]] += 1.0;
    }
    *out_k = k;
    *out_c = c;
    return m;
}

}  // namespace

std::vector<int> dense_relabel(const std::vector<int>& labels) {
    std::unordered_map<int, int> remap;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int v : labels) {
        auto [it, inserted] = remap.try_emplace(v, static_cast<int>(remap.size()));
        out.push_back(it->second);
    }
    return out;
}

// Jonker-Volgenant style shortest augmenting paths with dual potentials.
// The matrix is padded to square internally; O(n^3).
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    if (cost.empty()) return {};
    const int rows = static_cast<int>(cost.size());
    const int cols = static_cast<int>(cost[0].size());
    for (const auto& row : cost) {
        if (static_cast<int>(row.size()) != cols) {
            throw InvalidInput("cost matrix is ragged");
        }
    }
    const int n = std::max(rows, cols);

    auto at = [&](int r, int c) -> double {
        return (r < rows && c < cols) ? cost[r][c] : 0.0;
    };

    // 1-based arrays per the classic formulation.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0);  // match[col] = row occupying it
    std::vector<int> way(n + 1, 0);

    for (int r = 1; r <= n; ++r) {
        match[0] = r;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(rows, -1);
    for (int j = 1; j <= n; ++j) {
        const int r = match[j] - 1;
        if (r >= 0 && r < rows && j - 1 < cols) {
            row_to_col[r] = j - 1;
        }
    }
    return row_to_col;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    check_lengths(pred, truth);
    int k = 0, c = 0;
    const auto counts = confusion(pred, truth, &k, &c);
    // Maximize matches == minimize (max_count - count).
    double max_count = 0.0;
    for (const auto& row : counts) {
        for (double v : row) max_count = std::max(max_count, v);
    }
    std::vector<std::vector<double>> cost(k, std::vector<double>(c));
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < c; ++j) {
            cost[i][j] = max_count - counts[i][j];
        }
    }
    const auto assign = min_cost_assignment(cost);
    double correct = 0.0;
    for (int i = 0; i < k; ++i) {
        if (assign[i] >= 0) correct += counts[i][assign[i]];
    }
    return correct / static_cast<double>(pred.size());
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
    check_lengths(pred, truth);
    int k = 0, c = 0;
    const auto counts = confusion(pred, truth, &k, &c);
    const double n = static_cast<double>(pred.size());

    std::vector<double> row_sum(k, 0.0), col_sum(c, 0.0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < c; ++j) {
            row_sum[i] += counts[i][j];
            col_sum[j] += counts[i][j];
        }
    }
    double h_pred = 0.0, h_truth = 0.0, mi = 0.0;
    for (int i = 0; i < k; ++i) {
        if (row_sum[i] > 0.0) h_pred -= row_sum[i] / n * std::log(row_sum[i] / n);
    }
    for (int j = 0; j < c; ++j) {
        if (col_sum[j] > 0.0) h_truth -= col_sum[j] / n * std::log(col_sum[j] / n);
    }
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < c; ++j) {
            const double nij = counts[i][j];
            if (nij > 0.0) {
                mi += nij / n * std::log(n * nij / (row_sum[i] * col_sum[j]));
            }
        }
    }
    if (h_pred <= 0.0 || h_truth <= 0.0) return 0.0;  // constant side convention
    const double value = mi / std::sqrt(h_pred * h_truth);
    return std::clamp(value, 0.0, 1.0);
}

double purity(const std::vector<int>& pred, const std::vector<int>& truth) {
    check_lengths(pred, truth);
    int k = 0, c = 0;
    const auto counts = confusion(pred, truth, &k, &c);
    double majority = 0.0;
    for (int i = 0; i < k; ++i) {
        majority += *std::max_element(counts[i].begin(), counts[i].end());
    }
    return majority / static_cast<double>(pred.size());
}

}  // namespace rffkm
