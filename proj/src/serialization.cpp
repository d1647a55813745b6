#include "bcj/serialization.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace bcj {
namespace {

template <typename T>
T required(const Json& j, const char* key) {
    if (!j.contains(key)) throw ValidationError("missing_field", std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ValidationError("bad_field", std::string("field '") + key + "' has the wrong type");
    }
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

Json snapshot_to_json(const Assessment& a) {
    Json j;
    j["assessment_id"] = a.id;
    j["prior"] = {{"alpha", a.matrix.prior().alpha}, {"beta", a.matrix.prior().beta}};
    j["items"] = Json::array();
    for (const auto& item : a.items) {
        Json ji = {{"id", item.id}, {"label", item.label}};
        ji["external_key"] = item.external_key ? Json(*item.external_key) : Json(nullptr);
        j["items"].push_back(std::move(ji));
    }
    j["criteria"] = Json::array();
    for (const auto& c : a.criteria) j["criteria"].push_back({{"id", c.id}, {"name", c.name}, {"weight", c.weight}});
    j["posteriors"] = Json::array();
    const auto& m = a.matrix;
    for (std::size_t d = 0; d < m.criterion_count(); ++d) {
        for (std::size_t k = 0; k < m.pair_count(); ++k) {
            const auto pair = pair_at(m.item_count(), k);
            const auto& p = m.canonical(d, k);
            j["posteriors"].push_back({{"i", pair.first},
                                       {"j", pair.second},
                                       {"d", d},
                                       {"alpha", p.alpha},
                                       {"beta", p.beta},
                                       {"n", p.n_observations},
                                       {"moderated", m.is_moderated(d, k)}});
        }
    }
    return j;
}

Assessment snapshot_from_json(const Json& j) {
    std::vector<Item> items;
    for (const auto& ji : required<Json>(j, "items")) {
        Item item;
        item.id = required<int>(ji, "id");
        item.label = ji.value("label", std::string{});
        if (ji.contains("external_key") && !ji["external_key"].is_null()) {
            item.external_key = ji["external_key"].get<std::string>();
        }
        items.push_back(std::move(item));
    }
    std::vector<Criterion> criteria;
    for (const auto& jc : required<Json>(j, "criteria")) {
        criteria.push_back({required<int>(jc, "id"), jc.value("name", std::string{}), required<double>(jc, "weight")});
    }
    BetaPrior prior;
    if (j.contains("prior")) {
        prior.alpha = required<double>(j["prior"], "alpha");
        prior.beta = required<double>(j["prior"], "beta");
    }
    Assessment a = init_assessment(std::move(items), std::move(criteria), prior, j.value("assessment_id", std::string{}));
    for (const auto& jp : required<Json>(j, "posteriors")) {
        const int i = required<int>(jp, "i");
        const int jj = required<int>(jp, "j");
        const auto d = required<std::size_t>(jp, "d");
        PreferencePosterior p{required<double>(jp, "alpha"), required<double>(jp, "beta"),
                              required<std::int64_t>(jp, "n")};
        // Entries may be written in either orientation.
        if (i > jj) p = p.swapped();
        a.matrix.restore(d, pair_index(a.items.size(), {i, jj}), p, jp.value("moderated", false));
    }
    return a;
}

Json judgement_to_json(const JudgementRecord& r) {
    Json j = {{"seq", r.seq},
              {"pair", {r.pair.first, r.pair.second}},
              {"criterion", r.criterion},
              {"winner", r.winner},
              {"source", to_string(r.source)}};
    j["timestamp"] = r.timestamp ? Json(*r.timestamp) : Json(nullptr);
    if (r.source == JudgementSource::Moderator) {
        j["pseudo_wins"] = r.pseudo_wins;
        j["note"] = r.note;
    }
    if (r.idempotency_key) j["idempotency_key"] = *r.idempotency_key;
    return j;
}

JudgementRecord judgement_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("bad_record", "judgement record must be a JSON object");
    JudgementRecord r;
    r.seq = required<std::int64_t>(j, "seq");
    const auto pair = required<std::vector<int>>(j, "pair");
    if (pair.size() != 2) throw ValidationError("bad_pair", "pair must hold two item ids");
    r.pair = {pair[0], pair[1]};
    if (r.pair.first == r.pair.second || r.pair.first < 0 || r.pair.second < 0) {
        throw ValidationError("bad_pair", "pair must hold two distinct non-negative item ids");
    }
    r.criterion = required<int>(j, "criterion");
    r.winner = required<int>(j, "winner");
    if (!r.pair.contains(r.winner)) throw ValidationError("winner_not_in_pair", "winner must be one of the pair");
    r.source = judgement_source_from_string(required<std::string>(j, "source"));
    if (j.contains("timestamp") && !j["timestamp"].is_null()) r.timestamp = j["timestamp"].get<std::string>();
    if (r.source == JudgementSource::Moderator) {
        r.pseudo_wins = j.value("pseudo_wins", 1000.0);
        r.note = j.value("note", std::string{});
    }
    if (j.contains("idempotency_key") && j["idempotency_key"].is_string()) {
        r.idempotency_key = j["idempotency_key"].get<std::string>();
    }
    return r;
}

std::vector<JudgementRecord> read_judgement_log(std::istream& in) {
    std::vector<JudgementRecord> log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            log.push_back(judgement_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw ValidationError("malformed_log", "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("malformed_log", "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return log;
}

void write_judgement_log(std::ostream& out, const std::vector<JudgementRecord>& log) {
    for (const auto& r : log) out << judgement_to_json(r).dump() << '\n';
}

Json ranking_to_json(const Ranking& r) {
    Json j;
    j["order"] = r.order;
    j["items"] = Json::array();
    for (std::size_t i = 0; i < r.expected_ranks.size(); ++i) {
        Json ji = {{"item_id", i}, {"expected_rank", r.expected_ranks[i]}};
        if (i < r.distributions.size()) ji["pmf"] = r.distributions[i].pmf;
        j["items"].push_back(std::move(ji));
    }
    return j;
}

std::string ranking_to_csv(const Ranking& r) {
    std::ostringstream os;
    const std::size_t n = r.expected_ranks.size();
    os << "item_id,expected_rank";
    for (std::size_t a = 1; a <= n; ++a) os << ",rank_" << a << "_prob";
    os << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        os << i << ',' << fmt_double(r.expected_ranks[i]);
        for (std::size_t a = 0; a < n; ++a) {
            os << ',';
            if (i < r.distributions.size()) os << fmt_double(r.distributions[i].pmf[a]);
        }
        os << '\n';
    }
    return os.str();
}

Json agreement_to_json(const AgreementScore& s) {
    return {{"i", s.pair.first}, {"j", s.pair.second}, {"d", s.criterion}, {"map", s.map_pct},
            {"eap", s.eap_pct},  {"n", s.n_observations}, {"moderated", s.moderated}};
}

Json reliability_to_json(const PreferenceMatrix& matrix, double flag_threshold_pct) {
    Json j;
    j["flag_threshold"] = flag_threshold_pct;
    j["pairs"] = Json::array();
    for (const auto& s : agreement_matrix(matrix)) {
        Json js = agreement_to_json(s);
        js["flagged"] = !s.moderated && s.eap_pct < flag_threshold_pct;
        j["pairs"].push_back(std::move(js));
    }
    return j;
}

std::string reliability_to_csv(const PreferenceMatrix& matrix, double flag_threshold_pct) {
    std::ostringstream os;
    os << "i,j,d,map,eap,n,flagged,moderated\n";
    for (const auto& s : agreement_matrix(matrix)) {
        const bool flagged = !s.moderated && s.eap_pct < flag_threshold_pct;
        os << s.pair.first << ',' << s.pair.second << ',' << s.criterion << ',' << fmt_double(s.map_pct) << ','
           << fmt_double(s.eap_pct) << ',' << s.n_observations << ',' << (flagged ? "true" : "false") << ','
           << (s.moderated ? "true" : "false") << '\n';
    }
    return os.str();
}

Json btm_fit_to_json(const BtmFit& fit) {
    return {{"gamma", fit.gamma},
            {"stderr", fit.standard_errors},
            {"ssr", ssr(fit)},
            {"iterations", fit.iterations},
            {"converged", fit.converged}};
}

Json radar_to_json(const PreferenceMatrix& matrix, const std::vector<double>& weights) {
    Json j;
    std::vector<std::vector<double>> per_criterion;
    for (std::size_t d = 0; d < matrix.criterion_count(); ++d) {
        per_criterion.push_back(expected_ranking(matrix, d).expected_ranks);
    }
    const auto holistic = mcr_ranking(matrix, weights).expected_ranks;
    j["criteria"] = matrix.criterion_count();
    j["items"] = Json::array();
    for (std::size_t i = 0; i < matrix.item_count(); ++i) {
        std::vector<double> ranks;
        for (const auto& pc : per_criterion) ranks.push_back(pc[i]);
        j["items"].push_back({{"item", i}, {"expected_ranks", ranks}, {"holistic", holistic[i]}});
    }
    return j;
}

Json log_meta_to_json(const LogMeta& m) {
    return {{"n_items", m.n_items},
            {"weights", m.weights},
            {"aggregator", m.aggregator},
            {"final_order", m.final_order},
            {"seed", m.seed}};
}

LogMeta log_meta_from_json(const Json& j) {
    LogMeta m;
    m.n_items = required<std::size_t>(j, "n_items");
    m.weights = required<std::vector<double>>(j, "weights");
    m.aggregator = j.value("aggregator", std::string("bcj"));
    m.final_order = j.value("final_order", std::vector<int>{});
    m.seed = j.value("seed", std::uint64_t{0});
    return m;
}

}  // namespace bcj
