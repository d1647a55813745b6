#pragma once
// Rank distributions and rankings derived directly from preference
// posteriors, plus the two multi-criteria aggregations:
//   MCR - mix the per-criterion rank pmfs with weights lambda;
//   MCP - mix the per-criterion preference CDFs, then derive ranks.
//
// rank(i) = 1 + sum_{j != i} 1[j beats i] with independent Bernoulli
// indicators, so each item's rank pmf is Poisson-binomial.

#include <cstdint>
#include <span>
#include <vector>

#include "bcj/prefgraph.hpp"

namespace bcj {

struct RankDistribution {
    int item = 0;
    std::vector<double> pmf;  // pmf[a - 1] = P(rank = a)
    double expected_rank = 0.0;
};

struct Ranking {
    std::vector<int> order;              // best first
    std::vector<double> expected_ranks;  // indexed by item id
    std::vector<RankDistribution> distributions;  // by item id; may be empty
};

// Orders items by ascending expected rank, ties broken by item id.
Ranking ranking_from_expected(std::vector<double> expected_ranks);

// Poisson-binomial rank pmf of `item` given P(j beats item) for every j != item.
RankDistribution rank_distribution(int item, std::span<const double> beats_me);

// Poisson-binomial pmf of the number of successes (length probs.size() + 1).
std::vector<double> poisson_binomial_pmf(std::span<const double> probs);

// P(row beats column) for one criterion; diagonal is 0.
std::vector<double> win_probability_matrix(const PreferenceMatrix& matrix, std::size_t criterion);

// Expected ranks from a row-major N x N win-probability matrix:
// E[r_i] = 1 + sum_j P(j beats i).
std::vector<double> expected_ranks_from_wins(std::span<const double> wins, std::size_t n_items);

// Full per-item distributions from a win-probability matrix.
std::vector<RankDistribution> rank_distributions_from_wins(std::span<const double> wins,
                                                           std::size_t n_items);

// Single-criterion ranking. Distributions are filled when requested.
Ranking expected_ranking(const PreferenceMatrix& matrix, std::size_t criterion,
                         bool with_distributions = false);

// Mixture of component ranks for one item.
RankDistribution mcr_combine(std::span<const RankDistribution> components,
                             std::span<const double> weights);

// Holistic MCR ranking: E[r_i] = sum_d lambda_d E[r_{i,d}].
Ranking mcr_ranking(const PreferenceMatrix& matrix, std::span<const double> weights,
                    bool with_distributions = false);

struct MixtureComponent {
    double weight = 0.0;
    PreferencePosterior posterior;
};

struct MixturePreference {
    std::vector<MixtureComponent> components;
};

MixturePreference mixture_for_pair(const PreferenceMatrix& matrix, std::span<const double> weights,
                                   int i, int j);

// F(x) = sum_d lambda_d I_x(alpha_d, beta_d); x must lie in [0, 1].
double mcp_cdf(const MixturePreference& mixture, double x);

// P(i > j) under the mixture, sum_d lambda_d P_d(i > j).
double mcp_prob_preferred(const MixturePreference& mixture);

enum class McpMode { Exact, MonteCarlo };

struct McpOptions {
    McpMode mode = McpMode::Exact;
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
    bool with_distributions = false;
};

// Monte Carlo estimate of P(i > j): draw component q by cumulative weights,
// draw p ~ Beta(alpha_q, beta_q), count a win when p rounds to 1 (p >= 0.5).
// `component_counts`, when non-null, receives how often each component was
// drawn (sized to the component count).
double mcp_sample_win_fraction(const MixturePreference& mixture, std::size_t samples,
                               std::uint64_t seed,
                               std::vector<std::size_t>* component_counts = nullptr);

Ranking mcp_ranking(const PreferenceMatrix& matrix, std::span<const double> weights,
                    const McpOptions& options = {});

}  // namespace bcj
