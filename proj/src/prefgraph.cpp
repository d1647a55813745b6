#include "bcj/prefgraph.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "bcj/special.hpp"

namespace bcj {

std::size_t pair_index(std::size_t n_items, ItemPair pair) {
    const ItemPair c = pair.canonical();
    if (c.first < 0 || c.first == c.second || static_cast<std::size_t>(c.second) >= n_items) {
        throw ValidationError("bad_pair", "pair (" + std::to_string(pair.first) + ", " +
                                              std::to_string(pair.second) + ") is not a valid item pair");
    }
    const auto i = static_cast<std::size_t>(c.first);
    const auto j = static_cast<std::size_t>(c.second);
    return i * n_items - i * (i + 1) / 2 + (j - i - 1);
}

ItemPair pair_at(std::size_t n_items, std::size_t index) {
    if (index >= pair_count(n_items)) {
        throw std::out_of_range("pair index out of range");
    }
    std::size_t i = 0;
    std::size_t row = n_items - 1;
    while (index >= row) {
        index -= row;
        ++i;
        --row;
    }
    return {static_cast<int>(i), static_cast<int>(i + 1 + index)};
}

std::vector<ItemPair> all_pairs(std::size_t n_items) {
    std::vector<ItemPair> pairs;
    pairs.reserve(pair_count(n_items));
    for (std::size_t i = 0; i + 1 < n_items; ++i) {
        for (std::size_t j = i + 1; j < n_items; ++j) {
            pairs.push_back({static_cast<int>(i), static_cast<int>(j)});
        }
    }
    return pairs;
}

PreferenceMatrix::PreferenceMatrix(std::size_t n_items, std::size_t n_criteria, BetaPrior prior)
    : n_items_(n_items), n_criteria_(n_criteria), prior_(prior) {
    if (!(prior.alpha > 0.0) || !(prior.beta > 0.0)) {
        throw ValidationError("bad_prior", "Beta prior shapes must be positive");
    }
    const std::size_t total = n_criteria * bcj::pair_count(n_items);
    posteriors_.assign(total, PreferencePosterior{prior.alpha, prior.beta, 0});
    moderated_.assign(total, 0);
}

std::size_t PreferenceMatrix::slot(std::size_t criterion, std::size_t index) const {
    if (criterion >= n_criteria_) throw std::out_of_range("criterion out of range");
    if (index >= pair_count()) throw std::out_of_range("pair index out of range");
    return criterion * pair_count() + index;
}

std::size_t PreferenceMatrix::checked_slot(std::size_t criterion, int i, int j) const {
    if (i == j) throw ValidationError("same_item", "a pair needs two distinct items");
    if (criterion >= n_criteria_) throw ValidationError("bad_criterion", "criterion out of range");
    return slot(criterion, pair_index(n_items_, {i, j}));
}

PreferencePosterior PreferenceMatrix::posterior(std::size_t criterion, int i, int j) const {
    const auto& p = posteriors_[checked_slot(criterion, i, j)];
    return i < j ? p : p.swapped();
}

const PreferencePosterior& PreferenceMatrix::canonical(std::size_t criterion, std::size_t index) const {
    return posteriors_[slot(criterion, index)];
}

void PreferenceMatrix::record(std::size_t criterion, int i, int j, int winner) {
    const std::size_t s = checked_slot(criterion, i, j);
    if (winner != i && winner != j) {
        throw ValidationError("winner_not_in_pair", "winner must be one of the pair");
    }
    auto& p = posteriors_[s];
    if (winner == std::min(i, j)) {
        p.alpha += 1.0;
    } else {
        p.beta += 1.0;
    }
    ++p.n_observations;
}

void PreferenceMatrix::add_pseudo_wins(std::size_t criterion, int i, int j, int winner, double amount) {
    const std::size_t s = checked_slot(criterion, i, j);
    if (winner != i && winner != j) {
        throw ValidationError("winner_not_in_pair", "winner must be one of the pair");
    }
    if (!(amount > 0.0) || !std::isfinite(amount)) {
        throw ValidationError("bad_pseudo_wins", "pseudo-wins must be positive and finite");
    }
    auto& p = posteriors_[s];
    if (winner == std::min(i, j)) {
        p.alpha += amount;
    } else {
        p.beta += amount;
    }
    moderated_[s] = 1;
}

bool PreferenceMatrix::is_moderated(std::size_t criterion, std::size_t index) const {
    return moderated_[slot(criterion, index)] != 0;
}

bool PreferenceMatrix::is_pair_moderated(std::size_t index) const {
    for (std::size_t d = 0; d < n_criteria_; ++d) {
        if (is_moderated(d, index)) return true;
    }
    return false;
}

void PreferenceMatrix::restore(std::size_t criterion, std::size_t index,
                               const PreferencePosterior& posterior, bool moderated) {
    const std::size_t s = slot(criterion, index);
    if (!(posterior.alpha > 0.0) || !(posterior.beta > 0.0) || posterior.n_observations < 0) {
        throw ValidationError("bad_posterior", "posterior shapes must be positive");
    }
    posteriors_[s] = posterior;
    moderated_[s] = moderated ? 1 : 0;
}

double prob_preferred(const PreferencePosterior& posterior) {
    const double a = posterior.alpha;
    const double b = posterior.beta;
    if (a == b) return 0.5;
    // P(a, b) = 1 - I_0.5(a, b) = I_0.5(b, a); always evaluate with the
    // smaller shape first and derive the other orientation by complement.
    if (b < a) return special::beta_cdf(0.5, b, a);
    return 1.0 - special::beta_cdf(0.5, a, b);
}

std::vector<double> Assessment::weights() const {
    std::vector<double> w;
    w.reserve(criteria.size());
    for (const auto& c : criteria) w.push_back(c.weight);
    return w;
}

void validate_weights(const std::vector<double>& weights) {
    if (weights.empty()) throw ValidationError("no_criteria", "at least one criterion is required");
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ValidationError("bad_weight", "criterion weights must be finite and non-negative");
        }
    }
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("weight_sum", "criterion weights must sum to 1 (got " + std::to_string(sum) + ")");
    }
}

Assessment init_assessment(std::vector<Item> items, std::vector<Criterion> criteria, BetaPrior prior,
                           std::string id) {
    if (items.size() < 2) throw ValidationError("too_few_items", "an assessment needs at least 2 items");
    std::set<std::string> keys;
    for (std::size_t k = 0; k < items.size(); ++k) {
        if (items[k].id != static_cast<int>(k)) {
            throw ValidationError("item_ids", "item ids must be dense and ordered from 0");
        }
        if (items[k].external_key && !keys.insert(*items[k].external_key).second) {
            throw ValidationError("duplicate_key", "duplicate item external_key '" + *items[k].external_key + "'");
        }
    }
    for (std::size_t d = 0; d < criteria.size(); ++d) {
        if (criteria[d].id != static_cast<int>(d)) {
            throw ValidationError("criterion_ids", "criterion ids must be dense and ordered from 0");
        }
    }
    Assessment a;
    a.id = std::move(id);
    a.items = std::move(items);
    a.criteria = std::move(criteria);
    validate_weights(a.weights());
    a.matrix = PreferenceMatrix(a.items.size(), a.criteria.size(), prior);
    return a;
}

std::vector<Item> make_items(std::size_t n) {
    std::vector<Item> items(n);
    for (std::size_t k = 0; k < n; ++k) {
        items[k].id = static_cast<int>(k);
        items[k].label = "item-" + std::to_string(k);
    }
    return items;
}

std::vector<Criterion> make_criteria(const std::vector<double>& weights) {
    std::vector<Criterion> criteria(weights.size());
    for (std::size_t d = 0; d < weights.size(); ++d) {
        criteria[d].id = static_cast<int>(d);
        criteria[d].name = "criterion-" + std::to_string(d);
        criteria[d].weight = weights[d];
    }
    return criteria;
}

void record_judgement(Assessment& assessment, int criterion, ItemPair pair, int winner) {
    if (criterion < 0 || static_cast<std::size_t>(criterion) >= assessment.criteria.size()) {
        throw ValidationError("bad_criterion", "criterion out of range");
    }
    assessment.matrix.record(static_cast<std::size_t>(criterion), pair.first, pair.second, winner);
}

}  // namespace bcj
