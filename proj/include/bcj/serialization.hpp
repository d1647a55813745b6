#pragma once
// JSON and CSV forms of the engine's data: matrix snapshots, judgement logs,
// rankings, reliability matrices, Bradley-Terry fits and radar data.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcj/btm.hpp"
#include "bcj/prefgraph.hpp"
#include "bcj/rankgen.hpp"
#include "bcj/reliability.hpp"
#include "bcj/selection.hpp"

namespace bcj {

using Json = nlohmann::json;

// {assessment_id, prior, items[], criteria[], posteriors: [{i, j, d, alpha, beta, n, moderated}]}
// Doubles are written in shortest round-trip form, so loading a snapshot
// restores alpha and beta bit for bit.
Json snapshot_to_json(const Assessment& assessment);
Assessment snapshot_from_json(const Json& json);

// {seq, pair: [i, j], criterion, winner, source, timestamp[, pseudo_wins, note, idempotency_key]}
Json judgement_to_json(const JudgementRecord& record);
JudgementRecord judgement_from_json(const Json& json);

// Reads JSON lines; blank lines are skipped. Throws ValidationError whose
// message carries the 1-based line number of the first bad line.
std::vector<JudgementRecord> read_judgement_log(std::istream& in);
void write_judgement_log(std::ostream& out, const std::vector<JudgementRecord>& log);

Json ranking_to_json(const Ranking& ranking);
// item_id,expected_rank,rank_1_prob,...,rank_N_prob (probabilities blank
// when the ranking carries no distributions).
std::string ranking_to_csv(const Ranking& ranking);

Json reliability_to_json(const PreferenceMatrix& matrix, double flag_threshold_pct = 50.0);
// i,j,d,map,eap,n,flagged,moderated
std::string reliability_to_csv(const PreferenceMatrix& matrix, double flag_threshold_pct = 50.0);

Json agreement_to_json(const AgreementScore& score);

Json btm_fit_to_json(const BtmFit& fit);

// {criteria: [...], items: [{item, expected_ranks: [per criterion], holistic}]}
Json radar_to_json(const PreferenceMatrix& matrix, const std::vector<double>& weights);

// Side-car describing how to rebuild rankings from a judgement log.
struct LogMeta {
    std::size_t n_items = 0;
    std::vector<double> weights{1.0};
    std::string aggregator = "bcj";  // bcj | mcr | mcp
    std::vector<int> final_order;
    std::uint64_t seed = 0;
};

Json log_meta_to_json(const LogMeta& meta);
LogMeta log_meta_from_json(const Json& json);

}  // namespace bcj
