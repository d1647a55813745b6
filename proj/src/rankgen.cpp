#include "bcj/rankgen.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "bcj/kernels.hpp"
#include "bcj/random.hpp"
#include "bcj/special.hpp"

namespace bcj {
namespace {

void check_weights(std::span<const double> weights, std::size_t n_criteria) {
    if (weights.size() != n_criteria) {
        throw ValidationError("weight_count", "one weight per criterion is required");
    }
    validate_weights(std::vector<double>(weights.begin(), weights.end()));
}

std::vector<double> mixed_win_matrix(const PreferenceMatrix& matrix, std::span<const double> weights) {
    const std::size_t n = matrix.item_count();
    std::vector<double> mixed(n * n, 0.0);
    for (std::size_t d = 0; d < matrix.criterion_count(); ++d) {
        const auto wins = win_probability_matrix(matrix, d);
        kernels::axpy(weights[d], wins, mixed);
    }
    return mixed;
}

Ranking finish(std::vector<double> expected, std::vector<RankDistribution> distributions) {
    Ranking r = ranking_from_expected(std::move(expected));
    r.distributions = std::move(distributions);
    return r;
}

}  // namespace

Ranking ranking_from_expected(std::vector<double> expected_ranks) {
    Ranking r;
    r.order.resize(expected_ranks.size());
    std::iota(r.order.begin(), r.order.end(), 0);
    std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
        return expected_ranks[static_cast<std::size_t>(a)] < expected_ranks[static_cast<std::size_t>(b)];
    });
    r.expected_ranks = std::move(expected_ranks);
    return r;
}

std::vector<double> poisson_binomial_pmf(std::span<const double> probs) {
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("bad_probability", "probabilities must lie in [0, 1]");
    }
    std::vector<double> cur(probs.size() + 1, 0.0);
    std::vector<double> next(probs.size() + 1, 0.0);
    cur[0] = 1.0;
    std::size_t len = 1;
    for (double p : probs) {
        kernels::bernoulli_convolve(std::span<const double>(cur.data(), len), p,
                                    std::span<double>(next.data(), len + 1));
        ++len;
        std::swap(cur, next);
    }
    return cur;
}

RankDistribution rank_distribution(int item, std::span<const double> beats_me) {
    RankDistribution rd;
    rd.item = item;
    rd.pmf = poisson_binomial_pmf(beats_me);
    rd.expected_rank = 1.0 + std::accumulate(beats_me.begin(), beats_me.end(), 0.0);
    return rd;
}

std::vector<double> win_probability_matrix(const PreferenceMatrix& matrix, std::size_t criterion) {
    const std::size_t n = matrix.item_count();
    std::vector<double> wins(n * n, 0.0);
    std::size_t index = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j, ++index) {
            const double p = prob_preferred(matrix.canonical(criterion, index));
            wins[i * n + j] = p;
            wins[j * n + i] = prob_preferred(matrix.canonical(criterion, index).swapped());
        }
    }
    return wins;
}

std::vector<double> expected_ranks_from_wins(std::span<const double> wins, std::size_t n_items) {
    if (wins.size() != n_items * n_items) throw std::invalid_argument("win matrix must be N x N");
    std::vector<double> expected(n_items, 1.0);
    for (std::size_t j = 0; j < n_items; ++j) {
        kernels::axpy(1.0, wins.subspan(j * n_items, n_items), expected);
    }
    return expected;
}

std::vector<RankDistribution> rank_distributions_from_wins(std::span<const double> wins,
                                                           std::size_t n_items) {
    std::vector<RankDistribution> out;
    out.reserve(n_items);
    std::vector<double> beats_me;
    for (std::size_t i = 0; i < n_items; ++i) {
        beats_me.clear();
        for (std::size_t j = 0; j < n_items; ++j) {
            if (j != i) beats_me.push_back(wins[j * n_items + i]);
        }
        out.push_back(rank_distribution(static_cast<int>(i), beats_me));
    }
    return out;
}

Ranking expected_ranking(const PreferenceMatrix& matrix, std::size_t criterion, bool with_distributions) {
    const auto wins = win_probability_matrix(matrix, criterion);
    const std::size_t n = matrix.item_count();
    return finish(expected_ranks_from_wins(wins, n),
                  with_distributions ? rank_distributions_from_wins(wins, n) : std::vector<RankDistribution>{});
}

RankDistribution mcr_combine(std::span<const RankDistribution> components, std::span<const double> weights) {
    if (components.empty() || components.size() != weights.size()) {
        throw ValidationError("weight_count", "one weight per component distribution is required");
    }
    validate_weights(std::vector<double>(weights.begin(), weights.end()));
    const std::size_t len = components.front().pmf.size();
    RankDistribution out;
    out.item = components.front().item;
    out.pmf.assign(len, 0.0);
    for (std::size_t d = 0; d < components.size(); ++d) {
        if (components[d].pmf.size() != len) {
            throw ValidationError("length_mismatch", "component pmfs must share one length");
        }
        kernels::axpy(weights[d], components[d].pmf, out.pmf);
        out.expected_rank += weights[d] * components[d].expected_rank;
    }
    return out;
}

Ranking mcr_ranking(const PreferenceMatrix& matrix, std::span<const double> weights, bool with_distributions) {
    check_weights(weights, matrix.criterion_count());
    const std::size_t n = matrix.item_count();
    std::vector<double> expected(n, 0.0);
    std::vector<std::vector<RankDistribution>> per_criterion;
    for (std::size_t d = 0; d < matrix.criterion_count(); ++d) {
        const auto wins = win_probability_matrix(matrix, d);
        kernels::axpy(weights[d], expected_ranks_from_wins(wins, n), expected);
        if (with_distributions) per_criterion.push_back(rank_distributions_from_wins(wins, n));
    }
    std::vector<RankDistribution> mixed;
    if (with_distributions) {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<RankDistribution> comps;
            for (auto& c : per_criterion) comps.push_back(c[i]);
            mixed.push_back(mcr_combine(comps, weights));
            mixed.back().expected_rank = expected[i];
        }
    }
    return finish(std::move(expected), std::move(mixed));
}

MixturePreference mixture_for_pair(const PreferenceMatrix& matrix, std::span<const double> weights, int i, int j) {
    check_weights(weights, matrix.criterion_count());
    MixturePreference m;
    for (std::size_t d = 0; d < matrix.criterion_count(); ++d) {
        m.components.push_back({weights[d], matrix.posterior(d, i, j)});
    }
    return m;
}

double mcp_cdf(const MixturePreference& mixture, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("bad_x", "mixture CDF argument must lie in [0, 1]");
    double f = 0.0;
    for (const auto& c : mixture.components) {
        f += c.weight * special::beta_cdf(x, c.posterior.alpha, c.posterior.beta);
    }
    return std::clamp(f, 0.0, 1.0);
}

double mcp_prob_preferred(const MixturePreference& mixture) {
    double p = 0.0;
    for (const auto& c : mixture.components) p += c.weight * prob_preferred(c.posterior);
    return p;
}

double mcp_sample_win_fraction(const MixturePreference& mixture, std::size_t samples, std::uint64_t seed,
                               std::vector<std::size_t>* component_counts) {
    if (samples == 0) throw ValidationError("zero_samples", "Monte Carlo mode needs at least one sample");
    const auto& comps = mixture.components;
    if (comps.empty()) throw ValidationError("no_criteria", "mixture has no components");
    std::vector<double> cumulative(comps.size());
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t d = 0; d < comps.size(); ++d) {
        acc += comps[d].weight;
        cumulative[d] = acc;
        if (comps[d].weight > 0.0) last_positive = d;
    }
    if (component_counts) component_counts->assign(comps.size(), 0);

    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::size_t wins = 0;
    for (std::size_t m = 0; m < samples; ++m) {
        const double z = unif(rng);
        // z in [cum_{q-1}, cum_q); zero-weight components have empty intervals.
        std::size_t q = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), z) - cumulative.begin());
        if (q >= comps.size()) q = last_positive;
        if (component_counts) ++(*component_counts)[q];
        const double p = sample_beta(rng, comps[q].posterior.alpha, comps[q].posterior.beta);
        if (p >= 0.5) ++wins;
    }
    return static_cast<double>(wins) / static_cast<double>(samples);
}

Ranking mcp_ranking(const PreferenceMatrix& matrix, std::span<const double> weights, const McpOptions& options) {
    check_weights(weights, matrix.criterion_count());
    const std::size_t n = matrix.item_count();
    std::vector<double> wins;
    if (options.mode == McpMode::Exact) {
        wins = mixed_win_matrix(matrix, weights);
    } else {
        if (options.samples == 0) throw ValidationError("zero_samples", "Monte Carlo mode needs at least one sample");
        wins.assign(n * n, 0.0);
        std::size_t index = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j, ++index) {
                const auto mixture = mixture_for_pair(matrix, weights, static_cast<int>(i), static_cast<int>(j));
                const double f = mcp_sample_win_fraction(mixture, options.samples, derive_seed({options.seed, index}));
                wins[i * n + j] = f;
                wins[j * n + i] = 1.0 - f;
            }
        }
    }
    return finish(expected_ranks_from_wins(wins, n),
                  options.with_distributions ? rank_distributions_from_wins(wins, n)
                                             : std::vector<RankDistribution>{});
}

}  // namespace bcj
