#include "bcj/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "bcj/prefgraph.hpp"
#include "bcj/special.hpp"

namespace bcj {
namespace {

std::size_t merge_count(std::vector<int>& v, std::vector<int>& tmp, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::size_t inv = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
    std::size_t i = lo;
    std::size_t j = mid;
    std::size_t k = lo;
    while (i < mid && j < hi) {
        if (v[i] <= v[j]) {
            tmp[k++] = v[i++];
        } else {
            inv += mid - i;
            tmp[k++] = v[j++];
        }
    }
    while (i < mid) tmp[k++] = v[i++];
    while (j < hi) tmp[k++] = v[j++];
    std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

// Mid-ranks (1-based) of the pooled sample.
std::vector<double> midranks(std::span<const double> pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
    std::vector<double> ranks(n);
    for (std::size_t s = 0; s < n;) {
        std::size_t e = s + 1;
        while (e < n && pooled[idx[e]] == pooled[idx[s]]) ++e;
        const double r = 0.5 * static_cast<double>(s + 1 + e);
        for (std::size_t k = s; k < e; ++k) ranks[idx[k]] = r;
        s = e;
    }
    return ranks;
}

// P(W <= w) and P(W >= w) for the rank sum of m draws without replacement
// from the pooled ranks. Works on doubled ranks so mid-ranks stay integral.
std::pair<double, double> exact_tails(const std::vector<double>& ranks, std::size_t m, double w) {
    std::vector<long> doubled(ranks.size());
    long max_sum = 0;
    for (std::size_t k = 0; k < ranks.size(); ++k) {
        doubled[k] = std::lround(2.0 * ranks[k]);
        max_sum += doubled[k];
    }
    // counts[c][s] = number of c-subsets with doubled sum s
    std::vector<std::vector<double>> counts(m + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    counts[0][0] = 1.0;
    for (long r : doubled) {
        for (std::size_t c = m; c >= 1; --c) {
            auto& dst = counts[c];
            const auto& src = counts[c - 1];
            for (long s = max_sum; s >= r; --s) {
                dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - r)];
            }
        }
    }
    const long target = std::lround(2.0 * w);
    double total = 0.0;
    double le = 0.0;
    double ge = 0.0;
    for (long s = 0; s <= max_sum; ++s) {
        const double c = counts[m][static_cast<std::size_t>(s)];
        total += c;
        if (s <= target) le += c;
        if (s >= target) ge += c;
    }
    return {le / total, ge / total};
}

}  // namespace

std::size_t kendall_discordant_pairs(std::span<const int> truth, std::span<const int> estimate) {
    const std::size_t n = truth.size();
    if (estimate.size() != n) throw ValidationError("item_mismatch", "rankings must cover the same items");
    std::vector<int> position(n, -1);
    for (std::size_t k = 0; k < n; ++k) {
        const int item = truth[k];
        if (item < 0 || static_cast<std::size_t>(item) >= n || position[static_cast<std::size_t>(item)] != -1) {
            throw ValidationError("item_mismatch", "truth must be a permutation of 0..N-1");
        }
        position[static_cast<std::size_t>(item)] = static_cast<int>(k);
    }
    std::vector<int> seq(n);
    std::vector<char> seen(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        const int item = estimate[k];
        if (item < 0 || static_cast<std::size_t>(item) >= n || seen[static_cast<std::size_t>(item)]) {
            throw ValidationError("item_mismatch", "rankings must cover the same items");
        }
        seen[static_cast<std::size_t>(item)] = 1;
        seq[k] = position[static_cast<std::size_t>(item)];
    }
    std::vector<int> tmp(n);
    return merge_count(seq, tmp, 0, n);
}

double kendall_tau_normalized(std::span<const int> truth, std::span<const int> estimate) {
    const std::size_t pairs = pair_count(truth.size());
    const std::size_t d = kendall_discordant_pairs(truth, estimate);
    return pairs == 0 ? 0.0 : static_cast<double>(d) / static_cast<double>(pairs);
}

WilcoxonResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b, Alternative alternative,
                                 WilcoxonMethod method) {
    if (a.empty() || b.empty()) throw ValidationError("empty_sample", "both samples need at least one value");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    double w = 0.0;
    for (std::size_t k = 0; k < m; ++k) w += ranks[k];

    WilcoxonResult res;
    res.statistic = w;
    const bool exact = method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && m + n <= 20);
    res.exact = exact;
    double p_less = 1.0;
    double p_greater = 1.0;
    if (exact) {
        std::tie(p_less, p_greater) = exact_tails(ranks, m, w);
    } else {
        const double nn = static_cast<double>(m + n);
        const double mean = static_cast<double>(m) * (nn + 1.0) / 2.0;
        double tie_term = 0.0;
        std::vector<double> sorted = pooled;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t s = 0; s < sorted.size();) {
            std::size_t e = s + 1;
            while (e < sorted.size() && sorted[e] == sorted[s]) ++e;
            const double t = static_cast<double>(e - s);
            tie_term += t * t * t - t;
            s = e;
        }
        const double var = static_cast<double>(m) * static_cast<double>(n) / 12.0 *
                           ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
        if (var <= 0.0) {
            p_less = p_greater = 1.0;
        } else {
            const double sd = std::sqrt(var);
            p_less = special::normal_cdf((w - mean + 0.5) / sd);
            p_greater = 1.0 - special::normal_cdf((w - mean - 0.5) / sd);
        }
    }
    switch (alternative) {
        case Alternative::Less: res.p_value = p_less; break;
        case Alternative::Greater: res.p_value = p_greater; break;
        case Alternative::TwoSided: res.p_value = 2.0 * std::min(p_less, p_greater); break;
    }
    res.p_value = std::clamp(res.p_value, 0.0, 1.0);
    return res;
}

double bonferroni_alpha(std::size_t strategies, double family_alpha) {
    if (strategies == 0) throw ValidationError("no_strategies", "Bonferroni correction needs S >= 1");
    return family_alpha / static_cast<double>(strategies);
}

double radical_inverse(std::size_t index, unsigned base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= base;
    }
    return result;
}

namespace {
std::vector<unsigned> first_primes(std::size_t count) {
    std::vector<unsigned> primes;
    for (unsigned c = 2; primes.size() < count; ++c) {
        bool prime = true;
        for (unsigned p : primes) {
            if (p * p > c) break;
            if (c % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) primes.push_back(c);
    }
    return primes;
}
}  // namespace

std::vector<std::vector<double>> halton_sequence(std::size_t dims, std::size_t count, std::size_t skip) {
    const auto bases = first_primes(dims);
    std::vector<std::vector<double>> points(count, std::vector<double>(dims));
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t d = 0; d < dims; ++d) points[k][d] = radical_inverse(skip + k + 1, bases[d]);
    }
    return points;
}

std::vector<std::vector<double>> halton_simplex_weights(std::size_t dims, std::size_t count, std::size_t skip) {
    if (dims < 2) throw ValidationError("bad_dimension", "simplex weights need D >= 2");
    auto points = halton_sequence(dims - 1, count, skip);
    std::vector<std::vector<double>> weights;
    weights.reserve(count);
    for (auto& pt : points) {
        pt.push_back(1.0);
        std::sort(pt.begin(), pt.end());
        std::vector<double> w(dims);
        double prev = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
            w[d] = pt[d] - prev;
            prev = pt[d];
        }
        weights.push_back(std::move(w));
    }
    return weights;
}

double median(std::vector<double> values) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("size_mismatch", "need paired samples of size >= 2");
    const auto rx = midranks(x);
    const auto ry = midranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < rx.size(); ++k) {
        sxy += (rx[k] - mx) * (ry[k] - my);
        sxx += (rx[k] - mx) * (rx[k] - mx);
        syy += (ry[k] - my) * (ry[k] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace bcj
