#pragma once
// Beta posteriors over pairwise preferences.
//
// Every unordered item pair {i, j} holds one Beta(alpha, beta) posterior per
// criterion. Storage is canonical: i < j and alpha counts wins for i. All
// reads go through accessors that re-orient the posterior for the caller.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcj {

// Input that violates a documented precondition. `code` is a short
// machine-readable reason used by the service and CLI.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string code, const std::string& message)
        : std::invalid_argument(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct Item {
    int id = 0;
    std::string label;
    std::optional<std::string> external_key;
};

struct Criterion {
    int id = 0;
    std::string name;
    double weight = 1.0;
};

struct BetaPrior {
    double alpha = 1.0;
    double beta = 1.0;
    friend bool operator==(const BetaPrior&, const BetaPrior&) = default;
};

struct PreferencePosterior {
    double alpha = 1.0;
    double beta = 1.0;
    std::int64_t n_observations = 0;

    // The same evidence seen from the other item's side.
    PreferencePosterior swapped() const noexcept { return {beta, alpha, n_observations}; }

    friend bool operator==(const PreferencePosterior&, const PreferencePosterior&) = default;
};

struct ItemPair {
    int first = 0;
    int second = 0;

    // (min, max) orientation.
    ItemPair canonical() const noexcept {
        return first < second ? *this : ItemPair{second, first};
    }
    bool contains(int item) const noexcept { return item == first || item == second; }

    friend auto operator<=>(const ItemPair&, const ItemPair&) = default;
};

// C(n, 2)
constexpr std::size_t pair_count(std::size_t n_items) noexcept {
    return n_items < 2 ? 0 : n_items * (n_items - 1) / 2;
}

// Row-major index of a canonical pair in the strict upper triangle.
std::size_t pair_index(std::size_t n_items, ItemPair pair);
ItemPair pair_at(std::size_t n_items, std::size_t index);

// All canonical pairs in index order: (0,1), (0,2), ..., (N-2,N-1).
std::vector<ItemPair> all_pairs(std::size_t n_items);

class PreferenceMatrix {
public:
    PreferenceMatrix() = default;
    PreferenceMatrix(std::size_t n_items, std::size_t n_criteria, BetaPrior prior = {});

    std::size_t item_count() const noexcept { return n_items_; }
    std::size_t criterion_count() const noexcept { return n_criteria_; }
    std::size_t pair_count() const noexcept { return bcj::pair_count(n_items_); }
    std::size_t posterior_count() const noexcept { return posteriors_.size(); }
    const BetaPrior& prior() const noexcept { return prior_; }

    // Posterior over "i preferred to j" on `criterion`.
    PreferencePosterior posterior(std::size_t criterion, int i, int j) const;

    // Canonical-orientation posterior by pair index.
    const PreferencePosterior& canonical(std::size_t criterion, std::size_t index) const;

    // One unit-weight judgement: `winner` beat the other item of {i, j}.
    void record(std::size_t criterion, int i, int j, int winner);

    // Adds `amount` pseudo-wins to `winner` without counting an observation,
    // and marks the pair moderated on this criterion.
    void add_pseudo_wins(std::size_t criterion, int i, int j, int winner, double amount);

    bool is_moderated(std::size_t criterion, std::size_t index) const;
    // Moderated on any criterion.
    bool is_pair_moderated(std::size_t index) const;

    // Direct state restore (snapshot loading).
    void restore(std::size_t criterion, std::size_t index, const PreferencePosterior& posterior,
                 bool moderated);

    friend bool operator==(const PreferenceMatrix&, const PreferenceMatrix&) = default;

private:
    std::size_t slot(std::size_t criterion, std::size_t index) const;
    std::size_t checked_slot(std::size_t criterion, int i, int j) const;

    std::size_t n_items_ = 0;
    std::size_t n_criteria_ = 0;
    BetaPrior prior_{};
    std::vector<PreferencePosterior> posteriors_;
    std::vector<char> moderated_;
};

// P(i > j) = 1 - I_{0.5}(alpha, beta). Evaluated through one canonical
// incomplete-beta call so that P(a, b) + P(b, a) == 1 holds exactly.
double prob_preferred(const PreferencePosterior& posterior);

struct Assessment {
    std::string id;
    std::vector<Item> items;
    std::vector<Criterion> criteria;
    PreferenceMatrix matrix;

    std::vector<double> weights() const;
};

// Builds an assessment at the prior. Items and criteria must carry dense ids
// 0..N-1 / 0..D-1 in order; weights must be non-negative and sum to 1.
Assessment init_assessment(std::vector<Item> items, std::vector<Criterion> criteria,
                           BetaPrior prior = {}, std::string id = {});

void validate_weights(const std::vector<double>& weights);

// Convenience constructors for simulations: labels "item-<k>", equal weights.
std::vector<Item> make_items(std::size_t n);
std::vector<Criterion> make_criteria(const std::vector<double>& weights);

void record_judgement(Assessment& assessment, int criterion, ItemPair pair, int winner);

}  // namespace bcj
