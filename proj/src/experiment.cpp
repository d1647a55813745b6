#include "bcj/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "bcj/btm.hpp"
#include "bcj/serialization.hpp"
#include "bcj/stats.hpp"

namespace bcj {
namespace {

std::uint64_t hash_name(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string aggregator_name(Aggregator a) {
    switch (a) {
        case Aggregator::Bcj: return "bcj";
        case Aggregator::Mcr: return "mcr";
        case Aggregator::Mcp: return "mcp";
    }
    return "bcj";
}

std::string cell_stem(std::size_t n, std::size_t k) { return "N" + std::to_string(n) + "_K" + std::to_string(k); }

struct CellKey {
    std::size_t n;
    std::size_t k;
    std::size_t strategy;
};

}  // namespace

std::string StrategySpec::name() const { return aggregator_name(aggregator) + "-" + to_string(selection); }

StrategySpec strategy_from_string(const std::string& name) {
    const auto dash = name.find('-');
    if (dash == std::string::npos) throw ValidationError("bad_strategy", "strategy must look like mcp-entropy");
    const std::string agg = name.substr(0, dash);
    StrategySpec s;
    if (agg == "bcj") {
        s.aggregator = Aggregator::Bcj;
    } else if (agg == "mcr") {
        s.aggregator = Aggregator::Mcr;
    } else if (agg == "mcp") {
        s.aggregator = Aggregator::Mcp;
    } else {
        throw ValidationError("bad_strategy", "unknown ranking method '" + agg + "'");
    }
    s.selection = selection_strategy_from_string(name.substr(dash + 1));
    return s;
}

std::vector<StrategySpec> default_strategies() {
    std::vector<StrategySpec> out;
    for (auto agg : {Aggregator::Mcp, Aggregator::Mcr}) {
        for (auto sel : {SelectionStrategy::Entropy, SelectionStrategy::Random, SelectionStrategy::Nrp}) {
            out.push_back({agg, sel});
        }
    }
    out.push_back({Aggregator::Bcj, SelectionStrategy::Entropy});
    return out;
}

void validate_grid(const ExperimentGrid& grid, const MarkSet& marks) {
    if (grid.n_values.empty() || grid.k_values.empty() || grid.strategies.empty()) {
        throw ValidationError("bad_grid", "grid needs at least one N, K and strategy");
    }
    for (auto n : grid.n_values) {
        if (n < 2) throw ValidationError("bad_grid", "N must be >= 2");
        if (n > marks.items.size()) {
            throw ValidationError("sample_too_large", "N = " + std::to_string(n) + " exceeds the " +
                                                          std::to_string(marks.items.size()) + " marked items");
        }
    }
    for (auto k : grid.k_values) {
        if (k < 1) throw ValidationError("bad_grid", "K must be >= 1");
    }
    if (grid.trials < 1) throw ValidationError("bad_grid", "trials must be >= 1");
    const std::size_t d = marks.criteria.size();
    if (grid.weights.qmc_points == 0) {
        if (grid.weights.fixed.size() != d) {
            throw ValidationError("weight_count", "need one weight per marks criterion (" + std::to_string(d) + ")");
        }
        validate_weights(grid.weights.fixed);
    } else if (d < 2) {
        throw ValidationError("bad_dimension", "QMC weight sweeps need at least 2 criteria");
    }
    if (grid.sigma_override && !(*grid.sigma_override >= 0.0)) {
        throw ValidationError("bad_sigma", "sigma must be >= 0");
    }
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t n, std::size_t k, const std::string& strategy,
                        std::size_t weight_index, std::size_t trial) {
    return derive_seed({base, n, k, hash_name(strategy), weight_index, trial});
}

std::uint64_t data_seed(std::uint64_t base, std::size_t n, std::size_t k, std::size_t weight_index,
                        std::size_t trial) {
    return derive_seed({base, 0x5eedda7aULL, n, k, weight_index, trial});
}

std::vector<double> trial_weights(const WeightSource& source, std::size_t criteria, std::size_t trial) {
    if (source.qmc_points == 0) return source.fixed;
    const std::size_t point = trial % source.qmc_points;
    return halton_simplex_weights(criteria, 1, source.skip + point).front();
}

Ranking aggregate_ranking(Aggregator aggregator, const PreferenceMatrix& matrix, const std::vector<double>& weights) {
    switch (aggregator) {
        case Aggregator::Bcj: return expected_ranking(matrix, 0);
        case Aggregator::Mcr: return mcr_ranking(matrix, weights);
        case Aggregator::Mcp: return mcp_ranking(matrix, weights);
    }
    return expected_ranking(matrix, 0);
}

TrialResult run_trial(const ExperimentGrid& grid, const MarkSet& marks, std::size_t n, std::size_t k,
                      const StrategySpec& strategy, std::size_t trial) {
    TrialResult tr;
    tr.n = n;
    tr.k = k;
    tr.strategy = strategy.name();
    tr.trial = trial;
    tr.weights = trial_weights(grid.weights, marks.criteria.size(), trial);
    const std::size_t weight_index = grid.weights.qmc_points == 0 ? 0 : trial % grid.weights.qmc_points;
    tr.seed = cell_seed(grid.base_seed, n, k, tr.strategy, weight_index, trial);

    auto items = stratified_subsample(marks.items, n, tr.weights, data_seed(grid.base_seed, n, k, weight_index, trial));
    if (grid.sigma_override) {
        for (auto& it : items) std::fill(it.sigma.begin(), it.sigma.end(), *grid.sigma_override);
    }
    for (const auto& it : items) tr.item_keys.push_back(it.external_key);
    tr.truth = truth_order(items, tr.weights);

    const bool holistic = strategy.aggregator == Aggregator::Bcj;
    const std::size_t criteria = holistic ? 1 : marks.criteria.size();
    tr.criteria = criteria;
    Rng judge_rng(derive_seed({tr.seed, 0xdec1deULL}));
    const std::vector<double> weights = tr.weights;
    DecisionSource decide = [&](ItemPair pair, int criterion) {
        const auto& a = items[static_cast<std::size_t>(pair.first)];
        const auto& b = items[static_cast<std::size_t>(pair.second)];
        const bool first_wins = simulate_decision(a, b, holistic ? -1 : criterion, weights, judge_rng);
        return first_wins ? pair.first : pair.second;
    };
    const std::vector<double> ranker_weights = holistic ? std::vector<double>{1.0} : weights;
    Ranker ranker = [&](const PreferenceMatrix& m) { return aggregate_ranking(strategy.aggregator, m, ranker_weights); };

    SessionOptions opts;
    opts.strategy = strategy.selection;
    opts.budget_multiplier = k;
    opts.seed = derive_seed({tr.seed, 0x5e1ec7ULL});
    opts.record_trajectory = grid.record_trajectories;
    auto session = run_session(n, criteria, decide, ranker, opts);
    if (session.aborted) throw std::runtime_error("session aborted: " + session.error);

    for (const auto& r : session.trajectory) tr.tau_trajectory.push_back(kendall_tau_normalized(tr.truth, r.order));
    tr.estimate = session.trajectory.back().order;
    tr.final_tau = tr.tau_trajectory.back();

    try {
        BtmOptions bo;
        bo.pseudo_count = grid.btm_pseudo_count;
        bo.max_iter = 2000;
        bo.tol = 1e-9;
        tr.ssr = ssr(btm_fit(win_counts(n, session.log), bo));
    } catch (const ValidationError&) {
        tr.ssr = std::nan("");
    }
    if (grid.keep_logs) tr.log = std::move(session.log);
    return tr;
}

GridResults run_experiment_grid(const ExperimentGrid& grid, const MarkSet& marks, std::size_t jobs) {
    validate_grid(grid, marks);
    std::vector<CellKey> keys;
    for (std::size_t ni = 0; ni < grid.n_values.size(); ++ni) {
        for (std::size_t ki = 0; ki < grid.k_values.size(); ++ki) {
            for (std::size_t s = 0; s < grid.strategies.size(); ++s) {
                keys.push_back({grid.n_values[ni], grid.k_values[ki], s});
            }
        }
    }

    std::vector<std::vector<TrialResult>> per_cell(keys.size());
    std::vector<std::string> errors(keys.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < keys.size(); c = next++) {
            const auto& key = keys[c];
            try {
                for (std::size_t t = 0; t < grid.trials; ++t) {
                    per_cell[c].push_back(run_trial(grid, marks, key.n, key.k, grid.strategies[key.strategy], t));
                }
            } catch (const std::exception& e) {
                errors[c] = e.what();
            }
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, keys.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    GridResults results;
    const double alpha = bonferroni_alpha(grid.strategies.size());
    for (std::size_t c = 0; c < keys.size(); ++c) {
        CellSummary cs;
        cs.n = keys[c].n;
        cs.k = keys[c].k;
        cs.strategy = grid.strategies[keys[c].strategy].name();
        cs.error = errors[c];
        double ssr_sum = 0.0;
        std::size_t ssr_count = 0;
        for (const auto& tr : per_cell[c]) {
            cs.taus.push_back(tr.final_tau);
            if (std::isfinite(tr.ssr)) {
                ssr_sum += tr.ssr;
                ++ssr_count;
            }
        }
        cs.median_tau = median(cs.taus);
        cs.ssr_mean = ssr_count ? ssr_sum / static_cast<double>(ssr_count) : std::nan("");
        results.cells.push_back(std::move(cs));
    }

    // Pairwise comparisons within each (N, K).
    const std::size_t S = grid.strategies.size();
    for (std::size_t c0 = 0; c0 < results.cells.size(); c0 += S) {
        ComparisonMatrix cm;
        cm.n = results.cells[c0].n;
        cm.k = results.cells[c0].k;
        cm.alpha = alpha;
        cm.p_values.assign(S * S, 1.0);
        for (std::size_t r = 0; r < S; ++r) {
            cm.strategies.push_back(results.cells[c0 + r].strategy);
            for (std::size_t col = 0; col < S; ++col) {
                const auto& a = results.cells[c0 + r].taus;
                const auto& b = results.cells[c0 + col].taus;
                if (r == col || a.empty() || b.empty()) continue;
                const double p = wilcoxon_rank_sum(a, b, Alternative::Greater).p_value;
                cm.p_values[r * S + col] = p;
                if (p < alpha) ++results.cells[c0 + r].losses;
            }
        }
        results.comparisons.push_back(std::move(cm));
    }

    for (auto& cell : per_cell) {
        for (auto& tr : cell) results.trials.push_back(std::move(tr));
    }
    return results;
}

void write_results_store(const std::string& dir, const ExperimentGrid& grid, const GridResults& results) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "cells");
    fs::create_directories(root / "comparisons");
    if (grid.keep_logs) fs::create_directories(root / "logs");

    auto open = [](const fs::path& p) {
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
        return out;
    };

    {
        auto out = open(root / "summary.csv");
        out << "N,K,strategy,median_tau,losses,ssr_mean,trials,error\n";
        out.precision(10);
        for (const auto& c : results.cells) {
            out << c.n << ',' << c.k << ',' << c.strategy << ',' << c.median_tau << ',' << c.losses << ','
                << c.ssr_mean << ',' << c.taus.size() << ',' << c.error << '\n';
        }
    }

    std::map<std::string, std::ofstream> cell_files;
    for (const auto& tr : results.trials) {
        const std::string stem = cell_stem(tr.n, tr.k) + "_" + tr.strategy;
        auto it = cell_files.find(stem);
        if (it == cell_files.end()) it = cell_files.emplace(stem, open(root / "cells" / (stem + ".jsonl"))).first;
        Json j = {{"trial", tr.trial},       {"seed", tr.seed},
                  {"weights", tr.weights},   {"truth", tr.truth},
                  {"estimate", tr.estimate}, {"final_tau", tr.final_tau},
                  {"tau_trajectory", tr.tau_trajectory}, {"items", tr.item_keys}};
        j["ssr"] = std::isfinite(tr.ssr) ? Json(tr.ssr) : Json(nullptr);
        it->second << j.dump() << '\n';

        if (grid.keep_logs) {
            const std::string log_stem = stem + "_t" + std::to_string(tr.trial);
            auto log_out = open(root / "logs" / (log_stem + ".jsonl"));
            write_judgement_log(log_out, tr.log);
            LogMeta meta;
            meta.n_items = tr.n;
            meta.weights = tr.criteria == 1 ? std::vector<double>{1.0} : tr.weights;
            meta.aggregator = tr.strategy.substr(0, tr.strategy.find('-'));
            meta.final_order = tr.estimate;
            meta.seed = tr.seed;
            auto meta_out = open(root / "logs" / (log_stem + ".jsonl.meta.json"));
            meta_out << log_meta_to_json(meta).dump(2) << '\n';
        }
    }

    for (const auto& cm : results.comparisons) {
        auto out = open(root / "comparisons" / (cell_stem(cm.n, cm.k) + ".csv"));
        out.precision(10);
        out << "strategy";
        for (const auto& s : cm.strategies) out << ',' << s;
        out << ",losses\n";
        const std::size_t S = cm.strategies.size();
        for (std::size_t r = 0; r < S; ++r) {
            out << cm.strategies[r];
            std::size_t losses = 0;
            for (std::size_t c = 0; c < S; ++c) {
                const double p = cm.p_values[r * S + c];
                out << ',' << p;
                if (r != c && p < cm.alpha) ++losses;
            }
            out << ',' << losses << '\n';
        }
    }
}

}  // namespace bcj
