#pragma once
// Evaluation statistics for the experiment harness.

#include <cstddef>
#include <span>
#include <vector>

namespace bcj {

// Discordant pairs between two orderings of the same items / C(N, 2).
// Counted by merge-sort inversion counting in O(N log N).
double kendall_tau_normalized(std::span<const int> truth, std::span<const int> estimate);
std::size_t kendall_discordant_pairs(std::span<const int> truth, std::span<const int> estimate);

enum class Alternative { Less, Greater, TwoSided };
enum class WilcoxonMethod { Auto, Exact, Normal };

struct WilcoxonResult {
    double statistic = 0.0;  // rank sum of `a`
    double p_value = 1.0;
    bool exact = false;
};

// Wilcoxon rank-sum (Mann-Whitney) test. `Less` tests whether `a` tends to be
// smaller than `b`. Auto uses the exact null distribution for
// |a| + |b| <= 20 (mid-ranks for ties) and the tie-corrected normal
// approximation with continuity correction otherwise.
WilcoxonResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                                 Alternative alternative = Alternative::Less,
                                 WilcoxonMethod method = WilcoxonMethod::Auto);

// 0.05 / strategies
double bonferroni_alpha(std::size_t strategies, double family_alpha = 0.05);

// Radical inverse of `index` in `base`.
double radical_inverse(std::size_t index, unsigned base);

// Halton points in `dims` dimensions, starting at sequence index skip + 1
// (index 0 is the origin and is never emitted).
std::vector<std::vector<double>> halton_sequence(std::size_t dims, std::size_t count, std::size_t skip = 0);

// Weight vectors on the D-simplex from D - 1 Halton dimensions: sort the
// point with 0 and 1 appended and take adjacent differences.
std::vector<std::vector<double>> halton_simplex_weights(std::size_t dims, std::size_t count, std::size_t skip = 0);

double median(std::vector<double> values);

// Spearman rank correlation with mid-ranks.
double spearman_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace bcj
