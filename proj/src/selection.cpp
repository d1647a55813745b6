#include "bcj/selection.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "bcj/special.hpp"

namespace bcj {
namespace {

[[noreturn]] void no_selectable_pair() {
    throw ValidationError("no_selectable_pair", "every pair is excluded from selection");
}

}  // namespace

std::string to_string(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::Entropy: return "entropy";
        case SelectionStrategy::Random: return "random";
        case SelectionStrategy::Nrp: return "nrp";
    }
    return "entropy";
}

SelectionStrategy selection_strategy_from_string(const std::string& name) {
    if (name == "entropy") return SelectionStrategy::Entropy;
    if (name == "random") return SelectionStrategy::Random;
    if (name == "nrp") return SelectionStrategy::Nrp;
    throw ValidationError("bad_strategy", "unknown selection strategy '" + name + "'");
}

double pair_entropy(const PreferenceMatrix& matrix, std::size_t index, std::span<const double> weights) {
    double h = 0.0;
    for (std::size_t d = 0; d < matrix.criterion_count(); ++d) {
        const auto& p = matrix.canonical(d, index);
        const double hd = special::beta_entropy(p.alpha, p.beta);
        h += weights.empty() ? hd : weights[d] * hd;
    }
    return h;
}

ItemPair select_entropy(const PreferenceMatrix& matrix, std::span<const double> weights) {
    if (!weights.empty() && weights.size() != matrix.criterion_count()) {
        throw ValidationError("weight_count", "one weight per criterion is required");
    }
    std::size_t best = matrix.pair_count();
    double best_h = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < matrix.pair_count(); ++k) {
        if (matrix.is_pair_moderated(k)) continue;
        const double h = pair_entropy(matrix, k, weights);
        if (best == matrix.pair_count() || h > best_h) {
            best = k;
            best_h = h;
        }
    }
    if (best == matrix.pair_count()) no_selectable_pair();
    return pair_at(matrix.item_count(), best);
}

ItemPair select_random(std::span<const ItemPair> pairs, Rng& rng) {
    if (pairs.empty()) throw ValidationError("no_pairs", "cannot select from an empty pair set");
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    return pairs[pick(rng)];
}

SelectionState::SelectionState(SelectionStrategy strategy, std::size_t n_items, std::uint64_t seed)
    : strategy_(strategy), n_items_(n_items), seed_(seed), rng_(seed) {
    if (pair_count(n_items) == 0) throw ValidationError("no_pairs", "selection needs at least 2 items");
}

void SelectionState::refill() {
    pool_ = all_pairs(n_items_);
    std::shuffle(pool_.begin(), pool_.end(), rng_);
    ++rounds_;
}

ItemPair SelectionState::next_nrp(const PreferenceMatrix& matrix) {
    bool refilled = false;
    for (;;) {
        while (!pool_.empty()) {
            const ItemPair p = pool_.back();
            pool_.pop_back();
            if (!matrix.is_pair_moderated(pair_index(n_items_, p))) return p;
        }
        if (refilled) no_selectable_pair();
        refill();
        refilled = true;
    }
}

ItemPair SelectionState::next(const PreferenceMatrix& matrix) {
    if (matrix.item_count() != n_items_) throw std::invalid_argument("selection state and matrix disagree on N");
    switch (strategy_) {
        case SelectionStrategy::Entropy:
            return select_entropy(matrix, entropy_weights_);
        case SelectionStrategy::Random: {
            std::vector<ItemPair> open;
            for (std::size_t k = 0; k < matrix.pair_count(); ++k) {
                if (!matrix.is_pair_moderated(k)) open.push_back(pair_at(n_items_, k));
            }
            if (open.empty()) no_selectable_pair();
            return select_random(open, rng_);
        }
        case SelectionStrategy::Nrp:
            return next_nrp(matrix);
    }
    no_selectable_pair();
}

void SelectionState::resume(std::span<const ItemPair> served) {
    // Re-draw the same number of pairs from a fresh stream; moderation-free
    // draws reproduce an uninterrupted run exactly.
    rng_.seed(seed_);
    pool_.clear();
    rounds_ = 0;
    if (strategy_ == SelectionStrategy::Entropy) return;
    const PreferenceMatrix blank(n_items_, 1);
    for (std::size_t k = 0; k < served.size(); ++k) next(blank);
}

std::string to_string(JudgementSource s) {
    switch (s) {
        case JudgementSource::Human: return "human";
        case JudgementSource::Simulated: return "simulated";
        case JudgementSource::Moderator: return "moderator";
    }
    return "human";
}

JudgementSource judgement_source_from_string(const std::string& name) {
    if (name == "human") return JudgementSource::Human;
    if (name == "simulated") return JudgementSource::Simulated;
    if (name == "moderator") return JudgementSource::Moderator;
    throw ValidationError("bad_source", "unknown judgement source '" + name + "'");
}

void apply_record(PreferenceMatrix& matrix, const JudgementRecord& record) {
    if (record.criterion < 0 || static_cast<std::size_t>(record.criterion) >= matrix.criterion_count()) {
        throw ValidationError("bad_criterion", "criterion out of range");
    }
    const auto d = static_cast<std::size_t>(record.criterion);
    if (record.source == JudgementSource::Moderator) {
        matrix.add_pseudo_wins(d, record.pair.first, record.pair.second, record.winner, record.pseudo_wins);
    } else {
        matrix.record(d, record.pair.first, record.pair.second, record.winner);
    }
}

PreferenceMatrix replay(std::size_t n_items, std::size_t n_criteria, std::span<const JudgementRecord> log,
                        BetaPrior prior) {
    PreferenceMatrix m(n_items, n_criteria, prior);
    for (const auto& r : log) apply_record(m, r);
    return m;
}

Ranker default_ranker(std::vector<double> weights) {
    if (weights.size() <= 1) {
        return [](const PreferenceMatrix& m) { return expected_ranking(m, 0); };
    }
    return [w = std::move(weights)](const PreferenceMatrix& m) { return mcp_ranking(m, w); };
}

SessionResult run_session(std::size_t n_items, std::size_t n_criteria, const DecisionSource& decide,
                          const Ranker& ranker, const SessionOptions& options) {
    if (options.budget_multiplier < 1) throw ValidationError("bad_budget", "budget multiplier K must be >= 1");
    if (n_criteria < 1) throw ValidationError("no_criteria", "at least one criterion is required");
    SessionResult result;
    result.matrix = PreferenceMatrix(n_items, n_criteria, options.prior);
    SelectionState state(options.strategy, n_items, options.seed);
    const std::size_t budget = n_items * options.budget_multiplier;

    for (std::size_t b = 0; b < budget; ++b) {
        ItemPair pair;
        try {
            pair = state.next(result.matrix);
        } catch (const std::exception& e) {
            result.aborted = true;
            result.error = e.what();
            break;
        }
        bool failed = false;
        for (std::size_t d = 0; d < n_criteria; ++d) {
            JudgementRecord rec;
            rec.seq = static_cast<std::int64_t>(result.log.size());
            rec.pair = pair;
            rec.criterion = static_cast<int>(d);
            rec.source = JudgementSource::Simulated;
            try {
                rec.winner = decide(pair, static_cast<int>(d));
                apply_record(result.matrix, rec);
            } catch (const std::exception& e) {
                result.aborted = true;
                result.error = e.what();
                failed = true;
                break;
            }
            result.log.push_back(std::move(rec));
        }
        if (failed) break;
        ++result.iterations;
        if (options.record_trajectory || b + 1 == budget) result.trajectory.push_back(ranker(result.matrix));
    }
    if (result.trajectory.empty()) result.trajectory.push_back(ranker(result.matrix));
    return result;
}

}  // namespace bcj
