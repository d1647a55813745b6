#pragma once
// Bradley-Terry baseline: P(i beats j) = gamma_i / (gamma_i + gamma_j),
// fitted by minorization-maximization, with a scale-separation reliability
// index computed from the fit.

#include <cstddef>
#include <span>
#include <vector>

#include "bcj/prefgraph.hpp"
#include "bcj/selection.hpp"

namespace bcj {

// Row-major N x N counts: wins[i * N + j] = times i beat j.
struct WinCounts {
    std::size_t n_items = 0;
    std::vector<double> wins;

    explicit WinCounts(std::size_t n = 0) : n_items(n), wins(n * n, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return wins[i * n_items + j]; }
    double at(std::size_t i, std::size_t j) const { return wins[i * n_items + j]; }
};

// Observed wins from a judgement log, summed over criteria. Moderator
// entries are not observations and are skipped.
WinCounts win_counts(std::size_t n_items, std::span<const JudgementRecord> log);

double btm_loglik(std::span<const double> gamma, const WinCounts& counts);

struct BtmOptions {
    double tol = 1e-10;
    std::size_t max_iter = 10000;
    // Pseudo-wins added in both directions to every compared pair. Zero fits
    // the raw data; a small positive value keeps the MLE finite when an item
    // wins or loses every comparison.
    double pseudo_count = 0.0;
    bool trace_loglik = false;
};

struct BtmFit {
    std::vector<double> gamma;            // sums to 1
    std::vector<double> standard_errors;  // of log(gamma)
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<double> loglik_trace;     // per iteration, when traced
};

// Throws ValidationError("disconnected") when the comparison graph is not
// connected.
BtmFit btm_fit(const WinCounts& counts, const BtmOptions& options = {});

// (var(theta) - mean(se^2)) / var(theta) on theta = log(gamma), clamped to
// [0, 1]; 0 when the observed variance vanishes.
double ssr(const BtmFit& fit);

// Items ordered by descending gamma, ties by id.
std::vector<int> btm_order(const BtmFit& fit);

}  // namespace bcj
