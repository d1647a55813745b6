#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "bcj/kernels.hpp"
#include "bcj/rankgen.hpp"
#include "bcj/special.hpp"
#include "oracles.hpp"

using namespace bcj;

namespace {

PreferenceMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed, int judgements) {
    std::mt19937_64 rng(seed);
    PreferenceMatrix m(n, d);
    for (int k = 0; k < judgements; ++k) {
        const int i = static_cast<int>(rng() % n);
        int j = static_cast<int>(rng() % (n - 1));
        if (j >= i) ++j;
        m.record(rng() % d, i, j, (rng() % 3 == 0) ? j : i);
    }
    return m;
}

}  // namespace

TEST(RankDistribution, SingleIndicator) {
    const std::vector<double> row{0.75};
    const auto r = rank_distribution(0, row);
    EXPECT_NEAR(r.pmf[0], 0.25, 1e-15);
    EXPECT_NEAR(r.pmf[1], 0.75, 1e-15);
    EXPECT_NEAR(r.expected_rank, 1.75, 1e-15);
}

TEST(RankDistribution, PriorIsBinomial) {
    const std::vector<double> row{0.5, 0.5};
    const auto r = rank_distribution(1, row);
    EXPECT_EQ(r.pmf, (std::vector<double>{0.25, 0.5, 0.25}));
    EXPECT_EQ(r.expected_rank, 2.0);
}

TEST(RankDistribution, MatchesEnumerationFixture) {
    const std::vector<double> row{0.9, 0.8, 0.1};
    const auto r = rank_distribution(0, row);
    const auto ref = oracle::poisson_binomial_enumerate(row);
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(r.pmf[k], ref[k], 1e-15);
}

TEST(RankDistribution, MatchesEnumerationRandomRows) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t n = 1; n <= 10; ++n) {
        for (int t = 0; t < 50; ++t) {
            std::vector<double> row(n);
            for (auto& p : row) p = u(rng);
            const auto r = rank_distribution(0, row);
            const auto ref = oracle::poisson_binomial_enumerate(row);
            double ev = 0.0;
            for (std::size_t k = 0; k < ref.size(); ++k) {
                ASSERT_NEAR(r.pmf[k], ref[k], 1e-12);
                ev += static_cast<double>(k + 1) * r.pmf[k];
            }
            EXPECT_NEAR(r.expected_rank, ev, 1e-9);
            EXPECT_NEAR(std::accumulate(r.pmf.begin(), r.pmf.end(), 0.0), 1.0, 1e-9);
        }
    }
}

TEST(ExpectedRanking, PriorTiesByItemId) {
    PreferenceMatrix m(5, 1);
    const auto r = expected_ranking(m, 0, true);
    EXPECT_EQ(r.order, (std::vector<int>{0, 1, 2, 3, 4}));
    for (double e : r.expected_ranks) EXPECT_EQ(e, 3.0);
}

TEST(ExpectedRanking, DominanceFixture) {
    PreferenceMatrix m(3, 1);
    for (int k = 0; k < 5; ++k) {
        m.record(0, 0, 1, 0);
        m.record(0, 0, 2, 0);
        m.record(0, 1, 2, 1);
    }
    EXPECT_EQ(expected_ranking(m, 0).order, (std::vector<int>{0, 1, 2}));
}

TEST(ExpectedRanking, RankSumInvariant) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const std::size_t n = 2 + s % 9;
        const auto m = random_matrix(n, 1, s, 60);
        const auto r = expected_ranking(m, 0, true);
        const double sum = std::accumulate(r.expected_ranks.begin(), r.expected_ranks.end(), 0.0);
        EXPECT_NEAR(sum, n * (n + 1) / 2.0, 1e-6);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(r.distributions[i].expected_rank, r.expected_ranks[i], 1e-9);
    }
}

TEST(Mcr, DegenerateAndIdempotent) {
    RankDistribution a{0, {0.2, 0.3, 0.5}, 2.3};
    RankDistribution b{0, {0.6, 0.3, 0.1}, 1.5};
    RankDistribution c{0, {0.1, 0.1, 0.8}, 2.7};
    const std::vector<RankDistribution> comps{a, b, c};
    const std::vector<double> w1{1.0, 0.0, 0.0};
    const auto r1 = mcr_combine(comps, w1);
    EXPECT_EQ(r1.pmf, a.pmf);
    EXPECT_EQ(r1.expected_rank, a.expected_rank);

    const std::vector<RankDistribution> same{a, a};
    const std::vector<double> w2{0.3, 0.7};
    const auto r2 = mcr_combine(same, w2);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(r2.pmf[k], a.pmf[k], 1e-15);

    const std::vector<double> w3{0.1, 0.6, 0.3};
    const auto r3 = mcr_combine(comps, w3);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(r3.pmf[k], 0.1 * a.pmf[k] + 0.6 * b.pmf[k] + 0.3 * c.pmf[k], 1e-15);
    }
    EXPECT_NEAR(r3.expected_rank, 0.1 * 2.3 + 0.6 * 1.5 + 0.3 * 2.7, 1e-15);

    const std::vector<RankDistribution> bad{a, RankDistribution{0, {0.5, 0.5}, 1.5}};
    const std::vector<double> w4{0.5, 0.5};
    EXPECT_THROW(mcr_combine(bad, w4), ValidationError);
}

TEST(Mcp, CdfFixture) {
    MixturePreference mix{{{0.1, {1, 1, 0}}, {0.6, {2, 1, 1}}, {0.3, {1, 2, 1}}}};
    EXPECT_NEAR(mcp_cdf(mix, 0.5), 0.425, 1e-12);
    EXPECT_NEAR(mcp_prob_preferred(mix), 0.575, 1e-12);
    // against quadrature of the mixture density
    const double q = oracle::integrate(
        [](double p) {
            return 0.1 * oracle::beta_pdf(p, 1, 1) + 0.6 * oracle::beta_pdf(p, 2, 1) + 0.3 * oracle::beta_pdf(p, 1, 2);
        },
        0.0, 0.5);
    EXPECT_NEAR(mcp_cdf(mix, 0.5), q, 1e-12);
    EXPECT_EQ(mcp_cdf(mix, 0.0), 0.0);
    EXPECT_NEAR(mcp_cdf(mix, 1.0), 1.0, 1e-15);
    EXPECT_THROW(mcp_cdf(mix, 1.5), ValidationError);
    EXPECT_THROW(mcp_cdf(mix, -0.1), ValidationError);
}

TEST(Mcp, CdfIsMonotoneAndUniformMixtureIsIdentity) {
    MixturePreference uni{{{0.5, {1, 1, 0}}, {0.5, {1, 1, 0}}}};
    MixturePreference mix{{{0.2, {3, 7, 8}}, {0.8, {12, 2, 12}}}};
    double prev = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double x = k / 100.0;
        EXPECT_NEAR(mcp_cdf(uni, x), x, 1e-15);
        const double f = mcp_cdf(mix, x);
        EXPECT_GE(f, prev);
        prev = f;
    }
}

TEST(Mcp, SingleCriterionReducesToBcj) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto m = random_matrix(6, 1, 100 + s, 40);
        const std::vector<double> w{1.0};
        const auto mix = mixture_for_pair(m, w, 1, 4);
        EXPECT_EQ(mcp_prob_preferred(mix), prob_preferred(m.posterior(0, 1, 4)));
        const auto a = expected_ranking(m, 0);
        const auto b = mcp_ranking(m, w);
        const auto c = mcr_ranking(m, w);
        EXPECT_EQ(a.order, b.order);
        EXPECT_EQ(a.order, c.order);
        EXPECT_EQ(a.expected_ranks, b.expected_ranks);
    }
}

TEST(Mcp, DegenerateWeightsReduceToCriterionZero) {
    const auto m = random_matrix(7, 3, 42, 150);
    const std::vector<double> w{1.0, 0.0, 0.0};
    const auto ref = expected_ranking(m, 0);
    EXPECT_EQ(mcp_ranking(m, w).order, ref.order);
    EXPECT_EQ(mcr_ranking(m, w).order, ref.order);
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(mcp_ranking(m, w).expected_ranks[i], ref.expected_ranks[i]);
        EXPECT_EQ(mcr_ranking(m, w).expected_ranks[i], ref.expected_ranks[i]);
    }
}

TEST(McpMonteCarlo, EstimateWithinBinomialBound) {
    MixturePreference mix{{{0.1, {1, 1, 0}}, {0.6, {2, 1, 1}}, {0.3, {1, 2, 1}}}};
    const std::size_t M = 100000;
    const double est = mcp_sample_win_fraction(mix, M, 99);
    EXPECT_LE(std::abs(est - 0.575), 3.0 * std::sqrt(0.575 * 0.425 / M));
    EXPECT_EQ(est, mcp_sample_win_fraction(mix, M, 99));
    EXPECT_THROW(mcp_sample_win_fraction(mix, 0, 1), ValidationError);
}

TEST(McpMonteCarlo, ComponentFrequenciesFollowWeights) {
    MixturePreference mix{{{0.1, {1, 1, 0}}, {0.6, {2, 1, 1}}, {0.3, {1, 2, 1}}}};
    const std::size_t M = 100000;
    std::vector<std::size_t> counts;
    mcp_sample_win_fraction(mix, M, 2024, &counts);
    ASSERT_EQ(counts.size(), 3u);
    double chi2 = 0.0;
    const double w[3] = {0.1, 0.6, 0.3};
    for (int q = 0; q < 3; ++q) {
        const double e = w[q] * M;
        chi2 += (counts[q] - e) * (counts[q] - e) / e;
    }
    EXPECT_LT(chi2, 13.8155);  // chi-square(2) upper 0.001 quantile

    MixturePreference degenerate{{{1.0, {3, 2, 3}}, {0.0, {2, 3, 3}}}};
    mcp_sample_win_fraction(degenerate, 5000, 1, &counts);
    EXPECT_EQ(counts[0], 5000u);
    EXPECT_EQ(counts[1], 0u);
}

TEST(McpMonteCarlo, RankingReproducibleGivenSeed) {
    const auto m = random_matrix(5, 2, 8, 50);
    const std::vector<double> w{0.4, 0.6};
    McpOptions o;
    o.mode = McpMode::MonteCarlo;
    o.samples = 2000;
    o.seed = 17;
    const auto a = mcp_ranking(m, w, o);
    const auto b = mcp_ranking(m, w, o);
    EXPECT_EQ(a.expected_ranks, b.expected_ranks);
    o.samples = 0;
    EXPECT_THROW(mcp_ranking(m, w, o), ValidationError);
}

TEST(Rankgen, ScalarAndSimdKernelsAgree) {
    const auto m = random_matrix(9, 3, 77, 300);
    const std::vector<double> w{0.2, 0.5, 0.3};
    const auto before = kernels::active_isa();
    ASSERT_TRUE(kernels::select_isa(kernels::Isa::Scalar));
    McpOptions o;
    o.with_distributions = true;
    const auto ref_mcp = mcp_ranking(m, w, o);
    const auto ref_mcr = mcr_ranking(m, w, true);
    for (auto isa : {kernels::Isa::Avx2, kernels::Isa::Neon}) {
        if (!kernels::select_isa(isa)) continue;
        const auto got_mcp = mcp_ranking(m, w, o);
        const auto got_mcr = mcr_ranking(m, w, true);
        EXPECT_EQ(got_mcp.expected_ranks, ref_mcp.expected_ranks);
        EXPECT_EQ(got_mcr.expected_ranks, ref_mcr.expected_ranks);
        for (std::size_t i = 0; i < 9; ++i) {
            EXPECT_EQ(got_mcp.distributions[i].pmf, ref_mcp.distributions[i].pmf);
            EXPECT_EQ(got_mcr.distributions[i].pmf, ref_mcr.distributions[i].pmf);
        }
    }
    kernels::select_isa(before);
}
