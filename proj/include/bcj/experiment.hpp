#pragma once
// Simulation grid over (N, K, strategy, weights, trial): subsample marked
// items, run a judgement session against the simulated assessor, score the
// final ranking against the truth with Kendall's tau distance, and compare
// strategies with one-tailed Wilcoxon tests at a Bonferroni-corrected level.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bcj/marks.hpp"
#include "bcj/selection.hpp"

namespace bcj {

// How the holistic ranking is produced.
enum class Aggregator {
    Bcj,  // single criterion, holistic judgements on the weighted overall mark
    Mcr,  // per-criterion judgements, mixture of component ranks
    Mcp,  // per-criterion judgements, mixture of component preferences
};

struct StrategySpec {
    Aggregator aggregator = Aggregator::Mcp;
    SelectionStrategy selection = SelectionStrategy::Entropy;

    std::string name() const;  // e.g. "mcp-entropy"
    friend bool operator==(const StrategySpec&, const StrategySpec&) = default;
};

StrategySpec strategy_from_string(const std::string& name);

// The seven strategies compared in the reference experiments.
std::vector<StrategySpec> default_strategies();

struct WeightSource {
    // Fixed weights, or (when qmc_points > 0) Halton simplex weights where
    // trial t uses point skip + t. Points are shared by all strategies.
    std::vector<double> fixed;
    std::size_t qmc_points = 0;
    std::size_t skip = 0;
};

struct ExperimentGrid {
    std::vector<std::size_t> n_values{10};
    std::vector<std::size_t> k_values{10};
    std::vector<StrategySpec> strategies = default_strategies();
    WeightSource weights;
    std::size_t trials = 50;
    std::uint64_t base_seed = 20240601;
    // When set, overrides the per-item sigma from the marks.
    std::optional<double> sigma_override;
    bool record_trajectories = true;
    bool keep_logs = false;
    double btm_pseudo_count = 0.5;
};

void validate_grid(const ExperimentGrid& grid, const MarkSet& marks);

struct TrialResult {
    std::size_t n = 0;
    std::size_t k = 0;
    std::string strategy;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::vector<double> weights;
    std::vector<int> truth;
    std::vector<int> estimate;
    std::vector<std::string> item_keys;
    double final_tau = 0.0;
    std::vector<double> tau_trajectory;
    double ssr = 0.0;  // NaN when the Bradley-Terry fit is unavailable
    std::vector<JudgementRecord> log;  // kept when requested
    std::size_t criteria = 1;
};

struct CellSummary {
    std::size_t n = 0;
    std::size_t k = 0;
    std::string strategy;
    std::vector<double> taus;
    double median_tau = 0.0;
    double ssr_mean = 0.0;
    std::size_t losses = 0;
    std::string error;  // non-empty when the cell failed
};

struct ComparisonMatrix {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::string> strategies;
    // p[r * S + c]: one-tailed p that row strategy has larger tau than column.
    std::vector<double> p_values;
    double alpha = 0.05;
};

struct GridResults {
    std::vector<TrialResult> trials;
    std::vector<CellSummary> cells;
    std::vector<ComparisonMatrix> comparisons;
};

// Seed of one (N, K, strategy, weight index, trial) cell, independent of
// execution order.
std::uint64_t cell_seed(std::uint64_t base, std::size_t n, std::size_t k, const std::string& strategy,
                        std::size_t weight_index, std::size_t trial);

// Subsample seed; shared across strategies so they see the same items.
std::uint64_t data_seed(std::uint64_t base, std::size_t n, std::size_t k, std::size_t weight_index,
                        std::size_t trial);

std::vector<double> trial_weights(const WeightSource& source, std::size_t criteria, std::size_t trial);

TrialResult run_trial(const ExperimentGrid& grid, const MarkSet& marks, std::size_t n, std::size_t k,
                      const StrategySpec& strategy, std::size_t trial);

// Ranking of a session's matrix under an aggregator.
Ranking aggregate_ranking(Aggregator aggregator, const PreferenceMatrix& matrix, const std::vector<double>& weights);

GridResults run_experiment_grid(const ExperimentGrid& grid, const MarkSet& marks, std::size_t jobs = 1);

// Directory layout:
//   summary.csv                          N,K,strategy,median_tau,losses,ssr_mean
//   cells/N<n>_K<k>_<strategy>.jsonl     one trial per line
//   comparisons/N<n>_K<k>.csv            p-value matrix and loss counts
//   logs/N<n>_K<k>_<strategy>_t<trial>.jsonl (+ .meta.json), when kept
void write_results_store(const std::string& dir, const ExperimentGrid& grid, const GridResults& results);

}  // namespace bcj
