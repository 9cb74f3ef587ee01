#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "rffkm/metrics.hpp"

using namespace rffkm;

namespace {

// Exhaustive oracle: pad the confusion matrix to square and maximize the
// matched count over all column permutations. Feasible for k <= 6.
double brute_force_accuracy(const std::vector<int>& pred,
                            const std::vector<int>& truth) {
    const auto p = dense_relabel(pred);
    const auto t = dense_relabel(truth);
    const int k = *std::max_element(p.begin(), p.end()) + 1;
    const int c = *std::max_element(t.begin(), t.end()) + 1;
    const int m = std::max(k, c);
    std::vector<std::vector<int>> counts(m, std::vector<int>(m, 0));
    for (std::size_t i = 0; i < p.size(); ++i) counts[p[i]][t[i]]++;
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    int best = 0;
    do {
        int matched = 0;
        for (int i = 0; i < m; ++i) matched += counts[i][perm[i]];
        best = std::max(best, matched);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(p.size());
}

std::vector<int> random_labels(int n, int k, std::mt19937_64& eng) {
    std::uniform_int_distribution<int> dist(0, k - 1);
    std::vector<int> out(n);
    for (int& v : out) v = dist(eng);
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("accuracy fixtures") {
    const std::vector<int> truth{0, 1, 1, 1};
    CHECK(accuracy(truth, truth) == doctest::Approx(1.0));
    // relabeled prediction still scores 1
    CHECK(accuracy({1, 0, 0, 0}, truth) == doctest::Approx(1.0));
    CHECK(accuracy({0, 0, 1, 1}, truth) == doctest::Approx(0.75));
    CHECK_THROWS_AS(accuracy({0, 1}, {0, 1, 2}), InvalidInput);
}

TEST_CASE("accuracy equals the brute-force permutation maximum") {
    std::mt19937_64 eng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 5 + static_cast<int>(eng() % 40);
        const int kp = 1 + static_cast<int>(eng() % 6);
        const int kt = 1 + static_cast<int>(eng() % 6);
        const auto pred = random_labels(n, kp, eng);
        const auto truth = random_labels(n, kt, eng);
        CHECK(accuracy(pred, truth) ==
              doctest::Approx(brute_force_accuracy(pred, truth)));
    }
}

TEST_CASE("accuracy is invariant under relabeling either side") {
    std::mt19937_64 eng(55);
    for (int trial = 0; trial < 50; ++trial) {
        const auto pred = random_labels(30, 4, eng);
        const auto truth = random_labels(30, 3, eng);
        std::vector<int> shifted_pred(pred.size());
        std::vector<int> shifted_truth(truth.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            shifted_pred[i] = 7 - pred[i];  // bijective relabel
            shifted_truth[i] = 100 + 2 * truth[i];
        }
        CHECK(accuracy(shifted_pred, shifted_truth) ==
              doctest::Approx(accuracy(pred, truth)));
    }
}

TEST_CASE("nmi fixtures") {
    CHECK(nmi({0, 1, 2, 0, 1, 2}, {2, 0, 1, 2, 0, 1}) == doctest::Approx(1.0));
    CHECK(nmi({0, 0, 0, 0}, {0, 1, 2, 3}) == doctest::Approx(0.0));
    CHECK(nmi({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.0));
    // frozen from an independent evaluation of the definition
    CHECK(nmi({0, 0, 1, 1}, {0, 1, 1, 1}) ==
          doctest::Approx(0.3455920299442113).epsilon(1e-12));
    CHECK(nmi({0, 0, 1, 1, 2, 2}, {0, 0, 0, 1, 1, 1}) ==
          doctest::Approx(0.5295405780575617).epsilon(1e-12));
}

TEST_CASE("nmi symmetry and relabel invariance") {
    std::mt19937_64 eng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_labels(40, 4, eng);
        const auto b = random_labels(40, 5, eng);
        CHECK(nmi(a, b) == doctest::Approx(nmi(b, a)).epsilon(1e-12));
        std::vector<int> relabeled(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) relabeled[i] = 9 - a[i];
        CHECK(nmi(relabeled, b) == doctest::Approx(nmi(a, b)).epsilon(1e-12));
        CHECK(nmi(a, b) >= 0.0);
        CHECK(nmi(a, b) <= 1.0);
    }
}

TEST_CASE("purity fixtures") {
    CHECK(purity({0, 1, 0, 1}, {0, 1, 0, 1}) == doctest::Approx(1.0));
    CHECK(purity({0, 0, 0, 0, 0, 0}, {0, 1, 2, 0, 1, 2}) ==
          doctest::Approx(1.0 / 3.0));
    CHECK(purity({0, 0, 1, 1}, {0, 1, 1, 1}) == doctest::Approx(0.75));
}

TEST_CASE("dense relabel uses first-appearance order") {
    CHECK(dense_relabel({5, 5, 2, 9, 2}) == std::vector<int>{0, 0, 1, 2, 1});
}

TEST_CASE("min_cost_assignment on rectangular inputs") {
    // 2 rows, 3 cols: optimal picks 1 and 2.
    const std::vector<std::vector<double>> cost{{4.0, 1.0, 3.0},
                                                {2.0, 0.0, 5.0}};
    const auto assign = min_cost_assignment(cost);
    double total = 0.0;
    for (std::size_t r = 0; r < assign.size(); ++r) total += cost[r][assign[r]];
    CHECK(total == doctest::Approx(3.0));  // 1.0 + 2.0
    CHECK(assign[0] != assign[1]);
}

TEST_SUITE_END();
