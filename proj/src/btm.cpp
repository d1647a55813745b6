#include "bcj/btm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace bcj {
namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

bool connected(const WinCounts& c) {
    const std::size_t n = c.n_items;
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::size_t components = n;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (c.at(i, j) + c.at(j, i) > 0.0) {
                const auto a = find_root(parent, i);
                const auto b = find_root(parent, j);
                if (a != b) {
                    parent[a] = b;
                    --components;
                }
            }
        }
    }
    return components <= 1;
}

}  // namespace

WinCounts win_counts(std::size_t n_items, std::span<const JudgementRecord> log) {
    WinCounts c(n_items);
    for (const auto& r : log) {
        if (r.source == JudgementSource::Moderator) continue;
        const int loser = r.winner == r.pair.first ? r.pair.second : r.pair.first;
        c.at(static_cast<std::size_t>(r.winner), static_cast<std::size_t>(loser)) += 1.0;
    }
    return c;
}

double btm_loglik(std::span<const double> gamma, const WinCounts& counts) {
    const std::size_t n = counts.n_items;
    if (gamma.size() != n) throw ValidationError("gamma_size", "one score per item is required");
    for (double g : gamma) {
        if (!(g > 0.0)) throw ValidationError("bad_gamma", "Bradley-Terry scores must be positive");
    }
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double w = counts.at(i, j);
            if (i == j || w == 0.0) continue;
            ll += w * std::log(gamma[i]) - w * std::log(gamma[i] + gamma[j]);
        }
    }
    return ll;
}

BtmFit btm_fit(const WinCounts& raw, const BtmOptions& options) {
    const std::size_t n = raw.n_items;
    if (n < 2) throw ValidationError("too_few_items", "Bradley-Terry needs at least 2 items");
    if (!(options.tol > 0.0)) throw ValidationError("bad_tol", "tolerance must be positive");
    if (!connected(raw)) throw ValidationError("disconnected", "comparison graph is not connected");

    WinCounts counts = raw;
    if (options.pseudo_count > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j && raw.at(i, j) + raw.at(j, i) > 0.0) counts.at(i, j) += options.pseudo_count;
            }
        }
    }

    std::vector<double> total_wins(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) total_wins[i] += counts.at(i, j);
    }

    BtmFit fit;
    fit.gamma.assign(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    if (options.trace_loglik) fit.loglik_trace.push_back(btm_loglik(fit.gamma, counts));

    for (std::size_t it = 0; it < options.max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double denom = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double nij = counts.at(i, j) + counts.at(j, i);
                if (nij > 0.0) denom += nij / (fit.gamma[i] + fit.gamma[j]);
            }
            next[i] = denom > 0.0 ? total_wins[i] / denom : fit.gamma[i];
        }
        const double sum = std::accumulate(next.begin(), next.end(), 0.0);
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] /= sum;
            delta = std::max(delta, std::abs(next[i] - fit.gamma[i]));
        }
        fit.gamma.swap(next);
        fit.iterations = it + 1;
        // Items that never win collapse towards 0; keep the trace finite.
        const bool positive = std::all_of(fit.gamma.begin(), fit.gamma.end(), [](double g) { return g > 0.0; });
        if (options.trace_loglik && positive) fit.loglik_trace.push_back(btm_loglik(fit.gamma, counts));
        if (delta < options.tol) {
            fit.converged = positive;
            break;
        }
    }

    // Standard errors of theta = log(gamma) from the observed information,
    // which is a graph Laplacian; invert on the sum-to-zero subspace.
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double nij = counts.at(i, j) + counts.at(j, i);
            if (nij == 0.0) continue;
            const double gi = fit.gamma[i];
            const double gj = fit.gamma[j];
            const double p = gi + gj > 0.0 ? gi / (gi + gj) : 0.5;
            const double v = nij * p * (1.0 - p);
            const auto a = static_cast<Eigen::Index>(i);
            const auto b = static_cast<Eigen::Index>(j);
            info(a, a) += v;
            info(b, b) += v;
            info(a, b) -= v;
            info(b, a) -= v;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const Eigen::MatrixXd centre = Eigen::MatrixXd::Constant(info.rows(), info.cols(), inv_n);
    const Eigen::MatrixXd cov = (info + centre).fullPivLu().inverse() - centre;
    fit.standard_errors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        fit.standard_errors[i] = std::isfinite(v) && v > 0.0 ? std::sqrt(v) : (std::isfinite(v) ? 0.0 : v);
    }
    return fit;
}

double ssr(const BtmFit& fit) {
    const std::size_t n = fit.gamma.size();
    if (n < 2) return 0.0;
    std::vector<double> theta(n);
    for (std::size_t i = 0; i < n; ++i) theta[i] = std::log(fit.gamma[i]);
    const double mean = std::accumulate(theta.begin(), theta.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double t : theta) var += (t - mean) * (t - mean);
    var /= static_cast<double>(n - 1);
    if (!(var > 0.0) || !std::isfinite(var)) return 0.0;
    double mse = 0.0;
    for (double se : fit.standard_errors) mse += se * se;
    mse /= static_cast<double>(n);
    if (!std::isfinite(mse)) return 0.0;
    return std::clamp((var - mse) / var, 0.0, 1.0);
}

std::vector<int> btm_order(const BtmFit& fit) {
    std::vector<int> order(fit.gamma.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return fit.gamma[static_cast<std::size_t>(a)] > fit.gamma[static_cast<std::size_t>(b)];
    });
    return order;
}

}  // namespace bcj
