#pragma once
// Next-pair selection and the sequential judgement loop.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcj/prefgraph.hpp"
#include "bcj/random.hpp"
#include "bcj/rankgen.hpp"

namespace bcj {

enum class SelectionStrategy { Entropy, Random, Nrp };

std::string to_string(SelectionStrategy s);
SelectionStrategy selection_strategy_from_string(const std::string& name);

// Sum over criteria of the Beta differential entropy of the pair posterior.
// With `weights`, each criterion's entropy is scaled by its weight.
double pair_entropy(const PreferenceMatrix& matrix, std::size_t pair_index,
                    std::span<const double> weights = {});

// Highest (summed) entropy among non-moderated pairs; ties go to the first
// pair in canonical order. Throws when every pair is moderated.
ItemPair select_entropy(const PreferenceMatrix& matrix, std::span<const double> weights = {});

// Uniform draw with replacement over `pairs`.
ItemPair select_random(std::span<const ItemPair> pairs, Rng& rng);

// Strategy state that survives across selections: the RNG stream and, for
// NRP, the unused pairs of the current round.
class SelectionState {
public:
    SelectionState(SelectionStrategy strategy, std::size_t n_items, std::uint64_t seed);

    SelectionStrategy strategy() const noexcept { return strategy_; }

    // Weighted entropy variant (off by default; the plain sum ignores weights).
    void use_weighted_entropy(std::vector<double> weights) { entropy_weights_ = std::move(weights); }

    // Picks the next pair. Moderated pairs in `matrix` are never returned.
    ItemPair next(const PreferenceMatrix& matrix);

    // Number of pairs still unused in the current NRP round.
    std::size_t pool_size() const noexcept { return pool_.size(); }

    // Rebuilds random/NRP state after `served` pairs were handed out, so a
    // restarted service continues deterministically.
    void resume(std::span<const ItemPair> served);

private:
    ItemPair next_nrp(const PreferenceMatrix& matrix);
    void refill();

    SelectionStrategy strategy_;
    std::size_t n_items_;
    std::uint64_t seed_;
    std::uint64_t rounds_ = 0;
    Rng rng_;
    std::vector<ItemPair> pool_;  // back() is drawn next
    std::vector<double> entropy_weights_;
};

enum class JudgementSource { Human, Simulated, Moderator };

std::string to_string(JudgementSource s);
JudgementSource judgement_source_from_string(const std::string& name);

// One line of the append-only judgement log.
struct JudgementRecord {
    std::int64_t seq = 0;
    ItemPair pair;
    int criterion = 0;
    int winner = 0;
    JudgementSource source = JudgementSource::Simulated;
    std::optional<std::string> timestamp;
    // Moderator entries only.
    double pseudo_wins = 0.0;
    std::string note;
    std::optional<std::string> idempotency_key;

    friend bool operator==(const JudgementRecord&, const JudgementRecord&) = default;
};

// Folds a log into a matrix: unit judgements and moderator pseudo-wins.
void apply_record(PreferenceMatrix& matrix, const JudgementRecord& record);
PreferenceMatrix replay(std::size_t n_items, std::size_t n_criteria, std::span<const JudgementRecord> log,
                        BetaPrior prior = {});

// Supplies the winner of `pair` on `criterion`.
using DecisionSource = std::function<int(ItemPair pair, int criterion)>;
// Current ranking of a matrix.
using Ranker = std::function<Ranking(const PreferenceMatrix&)>;

struct SessionOptions {
    SelectionStrategy strategy = SelectionStrategy::Entropy;
    std::size_t budget_multiplier = 10;  // K; budget B = N * K selected pairs
    std::uint64_t seed = 0;
    BetaPrior prior{};
    bool record_trajectory = true;
};

struct SessionResult {
    std::vector<JudgementRecord> log;
    std::vector<Ranking> trajectory;  // ranking after each iteration
    PreferenceMatrix matrix;
    std::size_t iterations = 0;
    bool aborted = false;
    std::string error;
};

// Default ranker: single criterion -> expected_ranking, several -> exact MCP
// with `weights`.
Ranker default_ranker(std::vector<double> weights);

// B = N * K iterations: select a pair, take one judgement per criterion,
// update, re-rank. A throwing decision source ends the session early with the
// partial log kept and `aborted` set.
SessionResult run_session(std::size_t n_items, std::size_t n_criteria, const DecisionSource& decide,
                          const Ranker& ranker, const SessionOptions& options);

}  // namespace bcj
