#include "bcj/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "bcj/rankgen.hpp"
#include "bcj/selection.hpp"

namespace bcj {
namespace fs = std::filesystem;

namespace {

// Append-only file whose writes reach stable storage before returning.
class DurableLog {
public:
    explicit DurableLog(const fs::path& path) {
        fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0) throw std::runtime_error("cannot open log '" + path.string() + "'");
    }
    ~DurableLog() {
        if (fd_ >= 0) ::close(fd_);
    }
    DurableLog(const DurableLog&) = delete;
    DurableLog& operator=(const DurableLog&) = delete;

    void append(const std::string& data) {
        const char* p = data.data();
        std::size_t left = data.size();
        while (left > 0) {
            const ssize_t n = ::write(fd_, p, left);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw std::runtime_error("log write failed");
            }
            p += n;
            left -= static_cast<std::size_t>(n);
        }
        if (::fsync(fd_) != 0) throw std::runtime_error("log fsync failed");
    }

private:
    int fd_ = -1;
};

void write_atomically(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
    }
    fs::rename(tmp, path);
}

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string new_id() {
    static std::mt19937_64 rng{std::random_device{}()};
    static std::mutex m;
    std::lock_guard lock(m);
    std::ostringstream os;
    os << std::hex << rng();
    return os.str();
}

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
    return {status, Json{{"error", code}, {"message", message}}};
}

std::string metric_name(AgreementMetric m) { return m == AgreementMetric::Map ? "map" : "eap"; }
std::string aggregation_name(Aggregation a) { return a == Aggregation::Mean ? "mean" : "min"; }

StoppingRule parse_stopping(const Json& j) {
    StoppingRule rule;
    const std::string metric = j.value("metric", std::string("eap"));
    if (metric == "eap") {
        rule.metric = AgreementMetric::Eap;
    } else if (metric == "map") {
        rule.metric = AgreementMetric::Map;
    } else {
        throw ValidationError("bad_metric", "stopping metric must be eap or map");
    }
    const std::string agg = j.value("aggregation", std::string("min"));
    if (agg == "min") {
        rule.aggregation = Aggregation::Min;
    } else if (agg == "mean") {
        rule.aggregation = Aggregation::Mean;
    } else {
        throw ValidationError("bad_aggregation", "stopping aggregation must be min or mean");
    }
    if (!j.contains("threshold") || !j["threshold"].is_number()) {
        throw ValidationError("bad_threshold", "stopping rule needs a numeric threshold");
    }
    rule.threshold = j["threshold"].get<double>();
    if (!(rule.threshold >= 0.0 && rule.threshold <= 100.0)) {
        throw ValidationError("bad_threshold", "stopping threshold must lie in [0, 100]");
    }
    return rule;
}

Json stopping_json(const StoppingRule& r) {
    return {{"metric", metric_name(r.metric)}, {"threshold", r.threshold}, {"aggregation", aggregation_name(r.aggregation)}};
}

ItemPair parse_pair(const Json& j, std::size_t n_items) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        throw ValidationError("bad_pair", "pair must be [i, j] with integer item ids");
    }
    ItemPair p{j[0].get<int>(), j[1].get<int>()};
    pair_index(n_items, p);  // range check
    return p;
}

AssessmentStatus status_from_string(const std::string& s) {
    if (s == "active") return AssessmentStatus::Active;
    if (s == "stopped") return AssessmentStatus::Stopped;
    if (s == "complete") return AssessmentStatus::Complete;
    throw ValidationError("bad_status", "unknown status '" + s + "'");
}

}  // namespace

std::string to_string(AssessmentStatus s) {
    switch (s) {
        case AssessmentStatus::Active: return "active";
        case AssessmentStatus::Stopped: return "stopped";
        case AssessmentStatus::Complete: return "complete";
    }
    return "active";
}

ServiceConfig ServiceConfig::from_environment() {
    ServiceConfig c;
    if (const char* v = std::getenv("BCJ_DATA_DIR")) c.data_dir = v;
    if (const char* v = std::getenv("BCJ_SNAPSHOT_INTERVAL")) c.snapshot_interval = std::strtoull(v, nullptr, 10);
    if (const char* v = std::getenv("BCJ_TOKEN")) c.bearer_token = v;
    return c;
}

struct SessionService::Session {
    std::mutex mutex;
    std::string id;
    Json config;  // normalized creation config
    Assessment assessment;
    SelectionStrategy strategy = SelectionStrategy::Entropy;
    std::size_t budget_multiplier = 10;
    std::uint64_t seed = 0;
    std::optional<StoppingRule> stopping;
    double flag_threshold = 50.0;

    std::vector<JudgementRecord> log;
    std::vector<ItemPair> served_history;  // one entry per judged pair
    std::optional<SelectionState> selection;
    AssessmentStatus status = AssessmentStatus::Active;
    std::string stop_reason;  // why status left active; repeated in later stop notices
    std::optional<ItemPair> outstanding;
    std::map<std::string, Json> idempotent;

    fs::path dir;
    std::unique_ptr<DurableLog> log_file;
    std::size_t records_since_snapshot = 0;
    std::size_t snapshot_interval = 0;

    std::size_t budget() const { return assessment.items.size() * budget_multiplier; }
    std::size_t criteria() const { return assessment.criteria.size(); }

    void persist_records(const std::vector<JudgementRecord>& records) {
        if (!log_file) return;
        std::string buf;
        for (const auto& r : records) buf += judgement_to_json(r).dump() + "\n";
        log_file->append(buf);
        records_since_snapshot += records.size();
        if (snapshot_interval > 0 && records_since_snapshot >= snapshot_interval) {
            Json snap = snapshot_to_json(assessment);
            snap["log_length"] = log.size();
            write_atomically(dir / "snapshot.json", snap.dump());
            records_since_snapshot = 0;
        }
    }

    void halt(AssessmentStatus next, const std::string& reason) {
        status = next;
        stop_reason = reason;
        outstanding.reset();
        persist_status();
    }

    void persist_status() {
        if (dir.empty()) return;
        Json j = {{"status", to_string(status)}, {"reason", stop_reason}};
        j["stopping"] = stopping ? stopping_json(*stopping) : Json(nullptr);
        write_atomically(dir / "status.json", j.dump());
    }

    Ranking holistic_ranking() const {
        if (criteria() == 1) return expected_ranking(assessment.matrix, 0, true);
        McpOptions opts;
        opts.with_distributions = true;
        return mcp_ranking(assessment.matrix, assessment.weights(), opts);
    }

    Json progress() const {
        return {{"judgements", log.size()},
                {"pairs_judged", served_history.size()},
                {"budget_pairs", budget()},
                {"budget_judgements", budget() * criteria()}};
    }

    Json item_view(int id) const {
        const auto& items = config["items"];
        return items.at(static_cast<std::size_t>(id));
    }

    ApiResponse stop_notice(const std::string& reason) const {
        Json body = {{"stop", true}, {"reason", reason}, {"status", to_string(status)}, {"progress", progress()}};
        const auto rule = stopping.value_or(StoppingRule{});
        const auto check = stopping_check(assessment.matrix, rule.metric, rule.threshold, rule.aggregation);
        body["reliability"] = {{"metric", metric_name(rule.metric)},
                               {"aggregate", check.aggregate},
                               {"per_criterion", check.per_criterion},
                               {"pairs", reliability_to_json(assessment.matrix, flag_threshold)["pairs"]}};
        return {200, body};
    }

    Json summary() const {
        const auto ranking = holistic_ranking();
        Json eap = Json::array();
        for (const auto& s : agreement_matrix(assessment.matrix)) {
            eap.push_back({{"i", s.pair.first}, {"j", s.pair.second}, {"d", s.criterion}, {"eap", s.eap_pct}});
        }
        return {{"status", to_string(status)},
                {"progress", progress()},
                {"order", ranking.order},
                {"expected_ranks", ranking.expected_ranks},
                {"eap", eap}};
    }
};

SessionService::SessionService(ServiceConfig config) : config_(std::move(config)) {
    if (!config_.data_dir.empty()) {
        fs::create_directories(config_.data_dir);
        load_existing();
    }
}

SessionService::~SessionService() = default;

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::string> SessionService::assessment_ids() const {
    std::shared_lock lock(sessions_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : sessions_) ids.push_back(id);
    return ids;
}

namespace {

// Validates a creation request and returns the normalized config.
Json normalize_config(const Json& body) {
    if (!body.is_object()) throw ValidationError("bad_body", "request body must be a JSON object");
    Json cfg;
    Json items = Json::array();
    const auto& raw_items = body.contains("items") ? body["items"] : Json();
    if (raw_items.is_number_integer()) {
        const auto n = raw_items.get<long>();
        if (n < 2) throw ValidationError("too_few_items", "an assessment needs at least 2 items");
        for (long k = 0; k < n; ++k) items.push_back({{"id", k}, {"label", "item-" + std::to_string(k)}});
    } else if (raw_items.is_array()) {
        for (std::size_t k = 0; k < raw_items.size(); ++k) {
            const auto& ri = raw_items[k];
            Json item = {{"id", k}};
            if (ri.is_string()) {
                item["label"] = ri.get<std::string>();
            } else if (ri.is_object()) {
                item["label"] = ri.value("label", "item-" + std::to_string(k));
                if (ri.contains("external_key") && !ri["external_key"].is_null()) {
                    if (!ri["external_key"].is_string()) {
                        throw ValidationError("bad_item", "external_key must be a string");
                    }
                    item["external_key"] = ri["external_key"];
                }
                if (ri.contains("payload")) item["payload"] = ri["payload"];
            } else {
                throw ValidationError("bad_item", "items must be strings or objects");
            }
            items.push_back(std::move(item));
        }
    } else {
        throw ValidationError("bad_items", "items must be a list or a count");
    }
    cfg["items"] = items;

    Json criteria = Json::array();
    if (!body.contains("criteria")) {
        criteria.push_back({{"id", 0}, {"name", "overall"}, {"weight", 1.0}});
    } else {
        const auto& rc = body["criteria"];
        if (!rc.is_array() || rc.empty()) throw ValidationError("no_criteria", "criteria must be a non-empty list");
        for (std::size_t d = 0; d < rc.size(); ++d) {
            if (!rc[d].is_object() || !rc[d].contains("weight") || !rc[d]["weight"].is_number()) {
                throw ValidationError("bad_criterion", "each criterion needs a numeric weight");
            }
            criteria.push_back({{"id", d},
                                {"name", rc[d].value("name", "criterion-" + std::to_string(d))},
                                {"weight", rc[d]["weight"].get<double>()}});
        }
    }
    cfg["criteria"] = criteria;
    cfg["strategy"] = to_string(selection_strategy_from_string(body.value("strategy", std::string("entropy"))));
    const auto& k = body.contains("budget_multiplier") ? body["budget_multiplier"] : Json(10);
    if (!k.is_number_integer() || k.get<long>() < 1) {
        throw ValidationError("bad_budget", "budget_multiplier must be an integer >= 1");
    }
    cfg["budget_multiplier"] = k;
    cfg["seed"] = body.value("seed", std::uint64_t{0});
    cfg["flag_threshold"] = body.value("flag_threshold", 50.0);
    if (!(cfg["flag_threshold"].get<double>() >= 0.0 && cfg["flag_threshold"].get<double>() <= 100.0)) {
        throw ValidationError("bad_threshold", "flag_threshold must lie in [0, 100]");
    }
    if (body.contains("stopping") && !body["stopping"].is_null()) {
        cfg["stopping"] = stopping_json(parse_stopping(body["stopping"]));
    } else {
        cfg["stopping"] = nullptr;
    }
    BetaPrior prior;
    if (body.contains("prior")) {
        prior.alpha = body["prior"].value("alpha", 1.0);
        prior.beta = body["prior"].value("beta", 1.0);
    }
    cfg["prior"] = {{"alpha", prior.alpha}, {"beta", prior.beta}};
    return cfg;
}

std::shared_ptr<SessionService::Session> build_session(const std::string& id, const Json& cfg) {
    auto s = std::make_shared<SessionService::Session>();
    s->id = id;
    s->config = cfg;
    std::vector<Item> items;
    for (const auto& ji : cfg["items"]) {
        Item it;
        it.id = ji["id"].get<int>();
        it.label = ji.value("label", std::string{});
        if (ji.contains("external_key")) it.external_key = ji["external_key"].get<std::string>();
        items.push_back(std::move(it));
    }
    std::vector<Criterion> criteria;
    for (const auto& jc : cfg["criteria"]) {
        criteria.push_back({jc["id"].get<int>(), jc["name"].get<std::string>(), jc["weight"].get<double>()});
    }
    BetaPrior prior{cfg["prior"]["alpha"].get<double>(), cfg["prior"]["beta"].get<double>()};
    s->assessment = init_assessment(std::move(items), std::move(criteria), prior, id);
    s->strategy = selection_strategy_from_string(cfg["strategy"].get<std::string>());
    s->budget_multiplier = cfg["budget_multiplier"].get<std::size_t>();
    s->seed = cfg["seed"].get<std::uint64_t>();
    s->flag_threshold = cfg["flag_threshold"].get<double>();
    if (!cfg["stopping"].is_null()) s->stopping = parse_stopping(cfg["stopping"]);
    s->selection.emplace(s->strategy, s->assessment.items.size(), s->seed);
    return s;
}

}  // namespace

void SessionService::load_existing() {
    for (const auto& entry : fs::directory_iterator(config_.data_dir)) {
        if (!entry.is_directory() || !fs::exists(entry.path() / "config.json")) continue;
        std::ifstream cin(entry.path() / "config.json");
        const Json cfg = Json::parse(cin);
        const std::string id = entry.path().filename().string();
        auto s = build_session(id, cfg);
        s->dir = entry.path();
        s->snapshot_interval = config_.snapshot_interval;

        // Replay the log. A torn final line (crash mid-append) is dropped.
        const fs::path log_path = entry.path() / "log.jsonl";
        if (fs::exists(log_path)) {
            std::ifstream lin(log_path);
            std::vector<std::string> lines;
            for (std::string line; std::getline(lin, line);) {
                if (!line.empty()) lines.push_back(line);
            }
            for (std::size_t k = 0; k < lines.size(); ++k) {
                JudgementRecord r;
                try {
                    r = judgement_from_json(Json::parse(lines[k]));
                } catch (const std::exception&) {
                    if (k + 1 == lines.size()) break;
                    throw;
                }
                apply_record(s->assessment.matrix, r);
                s->log.push_back(std::move(r));
            }
        }
        std::size_t in_iteration = 0;
        for (const auto& r : s->log) {
            if (r.source == JudgementSource::Moderator) continue;
            if (in_iteration == 0) s->served_history.push_back(r.pair);
            in_iteration = (in_iteration + 1) % s->criteria();
            if (r.idempotency_key) s->idempotent[*r.idempotency_key] = Json();
        }
        s->selection->resume(s->served_history);
        if (fs::exists(entry.path() / "status.json")) {
            std::ifstream sin(entry.path() / "status.json");
            const Json st = Json::parse(sin);
            s->status = status_from_string(st.value("status", std::string("active")));
            s->stop_reason = st.value("reason", std::string{});
            s->stopping.reset();
            if (st.contains("stopping") && !st["stopping"].is_null()) s->stopping = parse_stopping(st["stopping"]);
        }
        s->log_file = std::make_unique<DurableLog>(log_path);
        std::unique_lock lock(sessions_mutex_);
        sessions_[id] = std::move(s);
    }
}

ApiResponse SessionService::create_assessment(const Json& body) {
    Json cfg;
    std::shared_ptr<Session> s;
    std::string id;
    try {
        cfg = normalize_config(body);
        id = new_id();
        s = build_session(id, cfg);
    } catch (const ValidationError& e) {
        return error_response(422, e.code(), e.what());
    } catch (const Json::exception& e) {
        return error_response(422, "bad_config", e.what());
    }
    s->snapshot_interval = config_.snapshot_interval;
    if (!config_.data_dir.empty()) {
        s->dir = fs::path(config_.data_dir) / id;
        fs::create_directories(s->dir);
        write_atomically(s->dir / "config.json", cfg.dump(2));
        s->log_file = std::make_unique<DurableLog>(s->dir / "log.jsonl");
        s->persist_status();
    }
    {
        std::unique_lock lock(sessions_mutex_);
        sessions_[id] = s;
    }
    return {201, Json{{"id", id}, {"status", "active"}, {"config", cfg}}};
}

ApiResponse SessionService::next_pair(const std::string& id) {
    auto s = find(id);
    if (!s) return error_response(404, "not_found", "unknown assessment '" + id + "'");
    std::lock_guard lock(s->mutex);
    if (s->status != AssessmentStatus::Active) {
        return s->stop_notice(s->stop_reason.empty() ? to_string(s->status) : s->stop_reason);
    }
    if (s->served_history.size() >= s->budget()) {
        s->halt(AssessmentStatus::Complete, "budget_exhausted");
        return s->stop_notice("budget_exhausted");
    }
    if (s->stopping) {
        const auto check = stopping_check(s->assessment.matrix, s->stopping->metric, s->stopping->threshold,
                                          s->stopping->aggregation);
        if (check.stop) {
            s->halt(AssessmentStatus::Stopped, "reliability_threshold");
            return s->stop_notice("reliability_threshold");
        }
    }
    if (!s->outstanding) {
        try {
            s->outstanding = s->selection->next(s->assessment.matrix);
        } catch (const ValidationError& e) {
            if (e.code() == "no_selectable_pair") return s->stop_notice("no_selectable_pair");
            throw;
        }
    }
    const ItemPair p = *s->outstanding;
    Json criteria = Json::array();
    for (const auto& c : s->assessment.criteria) criteria.push_back({{"id", c.id}, {"name", c.name}});
    return {200, Json{{"stop", false},
                      {"pair", {p.first, p.second}},
                      {"items", {s->item_view(p.first), s->item_view(p.second)}},
                      {"criteria", criteria},
                      {"progress", s->progress()},
                      {"status", to_string(s->status)}}};
}

ApiResponse SessionService::submit_judgement(const std::string& id, const Json& body) {
    auto s = find(id);
    if (!s) return error_response(404, "not_found", "unknown assessment '" + id + "'");
    std::lock_guard lock(s->mutex);
    if (!body.is_object()) return error_response(422, "bad_body", "request body must be a JSON object");

    std::optional<std::string> key;
    if (body.contains("idempotency_key") && body["idempotency_key"].is_string()) {
        key = body["idempotency_key"].get<std::string>();
        const auto it = s->idempotent.find(*key);
        if (it != s->idempotent.end()) {
            if (it->second.is_null()) it->second = s->summary();
            return {200, it->second};
        }
    }

    ItemPair pair;
    try {
        pair = parse_pair(body.value("pair", Json()), s->assessment.items.size());
    } catch (const ValidationError& e) {
        return error_response(422, e.code(), e.what());
    }
    if (!s->outstanding || s->outstanding->canonical() != pair.canonical()) {
        return error_response(409, "stale_pair", "pair was not the most recently served pair");
    }
    const ItemPair served = *s->outstanding;

    const std::size_t D = s->criteria();
    std::vector<int> winners(D, -1);
    const Json w = body.value("winners", Json());
    if (w.is_array() && w.size() == D) {
        for (std::size_t d = 0; d < D; ++d) {
            if (w[d].is_number_integer()) winners[d] = w[d].get<int>();
        }
    } else if (w.is_object() && w.size() == D) {
        for (const auto& [k, v] : w.items()) {
            const std::size_t d = static_cast<std::size_t>(std::atol(k.c_str()));
            if (d < D && v.is_number_integer()) winners[d] = v.get<int>();
        }
    } else if (D == 1 && w.is_number_integer()) {
        winners[0] = w.get<int>();
    }
    for (int win : winners) {
        if (!served.contains(win)) {
            return error_response(422, "bad_winners", "winners must name one item of the pair for every criterion");
        }
    }

    std::vector<JudgementRecord> records;
    const std::string ts = now_iso8601();
    for (std::size_t d = 0; d < D; ++d) {
        JudgementRecord r;
        r.seq = static_cast<std::int64_t>(s->log.size() + d);
        r.pair = served;
        r.criterion = static_cast<int>(d);
        r.winner = winners[d];
        r.source = JudgementSource::Human;
        r.timestamp = ts;
        if (d == 0) r.idempotency_key = key;
        records.push_back(std::move(r));
    }
    s->persist_records(records);  // durable before any state change is visible
    for (auto& r : records) {
        apply_record(s->assessment.matrix, r);
        s->log.push_back(std::move(r));
    }
    s->served_history.push_back(served);
    s->outstanding.reset();
    if (s->served_history.size() >= s->budget()) s->halt(AssessmentStatus::Complete, "budget_exhausted");
    Json response = s->summary();
    if (key) s->idempotent[*key] = response;
    return {200, response};
}

ApiResponse SessionService::moderate(const std::string& id, const Json& body) {
    auto s = find(id);
    if (!s) return error_response(404, "not_found", "unknown assessment '" + id + "'");
    std::lock_guard lock(s->mutex);
    if (!body.is_object()) return error_response(422, "bad_body", "request body must be a JSON object");
    std::vector<JudgementRecord> records;
    try {
        const ItemPair pair = parse_pair(body.value("pair", Json()), s->assessment.items.size());
        const Json wj = body.value("winner", Json());
        if (!wj.is_number_integer() || !pair.contains(wj.get<int>())) {
            throw ValidationError("winner_not_in_pair", "winner must be one of the pair");
        }
        const double pseudo = body.value("pseudo_wins", 1000.0);
        if (!(pseudo > 0.0)) throw ValidationError("bad_pseudo_wins", "pseudo_wins must be positive");
        std::vector<int> criteria;
        if (body.contains("criterion") && !body["criterion"].is_null()) {
            const int d = body["criterion"].get<int>();
            if (d < 0 || static_cast<std::size_t>(d) >= s->criteria()) {
                throw ValidationError("bad_criterion", "criterion out of range");
            }
            criteria.push_back(d);
        } else {
            for (std::size_t d = 0; d < s->criteria(); ++d) criteria.push_back(static_cast<int>(d));
        }
        const std::string ts = now_iso8601();
        for (int d : criteria) {
            JudgementRecord r;
            r.seq = static_cast<std::int64_t>(s->log.size() + records.size());
            r.pair = pair;
            r.criterion = d;
            r.winner = wj.get<int>();
            r.source = JudgementSource::Moderator;
            r.timestamp = ts;
            r.pseudo_wins = pseudo;
            r.note = body.value("note", std::string{});
            records.push_back(std::move(r));
        }
    } catch (const ValidationError& e) {
        return error_response(422, e.code(), e.what());
    } catch (const Json::exception& e) {
        return error_response(422, "bad_body", e.what());
    }
    s->persist_records(records);
    Json moderated = Json::array();
    for (auto& r : records) {
        apply_record(s->assessment.matrix, r);
        moderated.push_back(agreement_to_json(
            agreement(s->assessment.matrix, static_cast<std::size_t>(r.criterion),
                      pair_index(s->assessment.items.size(), r.pair))));
        s->log.push_back(std::move(r));
    }
    if (s->outstanding && s->outstanding->canonical() == records.front().pair.canonical()) s->outstanding.reset();
    return {200, Json{{"moderated", moderated}, {"summary", s->summary()}}};
}

ApiResponse SessionService::reopen(const std::string& id, const Json& body) {
    auto s = find(id);
    if (!s) return error_response(404, "not_found", "unknown assessment '" + id + "'");
    std::lock_guard lock(s->mutex);
    if (s->status == AssessmentStatus::Complete) {
        return error_response(409, "budget_exhausted", "a completed assessment cannot be reopened");
    }
    try {
        if (body.is_object() && body.contains("threshold")) {
            StoppingRule rule = s->stopping.value_or(StoppingRule{});
            Json j = stopping_json(rule);
            j["threshold"] = body["threshold"];
            s->stopping = parse_stopping(j);
        } else {
            s->stopping.reset();
        }
    } catch (const ValidationError& e) {
        return error_response(422, e.code(), e.what());
    }
    s->halt(AssessmentStatus::Active, "");
    return {200, Json{{"status", "active"}, {"stopping", s->stopping ? stopping_json(*s->stopping) : Json(nullptr)}}};
}

ApiResponse SessionService::report(const std::string& id) {
    auto s = find(id);
    if (!s) return error_response(404, "not_found", "unknown assessment '" + id + "'");
    std::lock_guard lock(s->mutex);
    const auto& m = s->assessment.matrix;
    const auto weights = s->assessment.weights();
    Json body;
    body["id"] = s->id;
    body["status"] = to_string(s->status);
    body["progress"] = s->progress();
    body["holistic"] = ranking_to_json(s->holistic_ranking());
    body["holistic_mcr"] = ranking_to_json(mcr_ranking(m, weights, true));
    body["per_criterion"] = Json::array();
    for (std::size_t d = 0; d < m.criterion_count(); ++d) {
        Json r = ranking_to_json(expected_ranking(m, d, true));
        r["criterion"] = d;
        body["per_criterion"].push_back(std::move(r));
    }
    body["reliability"] = reliability_to_json(m, s->flag_threshold);
    body["radar"] = radar_to_json(m, weights);
    body["moderation_queue"] = Json::array();
    for (const auto& f : flag_low_agreement(m, s->flag_threshold)) body["moderation_queue"].push_back(agreement_to_json(f));
    body["moderations"] = Json::array();
    for (const auto& r : s->log) {
        if (r.source == JudgementSource::Moderator) body["moderations"].push_back(judgement_to_json(r));
    }
    return {200, body};
}

ApiResponse SessionService::export_snapshot(const std::string& id) {
    auto s = find(id);
    if (!s) return error_response(404, "not_found", "unknown assessment '" + id + "'");
    std::lock_guard lock(s->mutex);
    return {200, snapshot_to_json(s->assessment)};
}

void SessionService::mount(httplib::Server& server) {
    auto reply = [](httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    auto parse_body = [](const httplib::Request& req) -> std::optional<Json> {
        if (req.body.empty()) return Json::object();
        try {
            return Json::parse(req.body);
        } catch (const Json::exception&) {
            return std::nullopt;
        }
    };
    const std::string token = config_.bearer_token;
    server.set_pre_routing_handler([token, reply](const httplib::Request& req, httplib::Response& res) {
        if (token.empty() || req.path == "/health") return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("Authorization") == "Bearer " + token) {
            return httplib::Server::HandlerResponse::Unhandled;
        }
        reply(res, error_response(401, "unauthorized", "missing or wrong bearer token"));
        return httplib::Server::HandlerResponse::Handled;
    });

    auto with_body = [this, reply, parse_body](auto method) {
        return [this, reply, parse_body, method](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            if (!body) {
                reply(res, error_response(400, "bad_json", "request body is not valid JSON"));
                return;
            }
            const std::string id = req.matches.size() > 1 ? req.matches[1].str() : std::string{};
            reply(res, method(id, *body));
        };
    };
    auto without_body = [this, reply](auto method) {
        return [this, reply, method](const httplib::Request& req, httplib::Response& res) {
            reply(res, method(req.matches[1].str()));
        };
    };

    server.Post("/assessments", with_body([this](const std::string&, const Json& b) { return create_assessment(b); }));
    server.Get(R"(/assessments/([^/]+)/next)", without_body([this](const std::string& id) { return next_pair(id); }));
    server.Post(R"(/assessments/([^/]+)/judgements)",
                with_body([this](const std::string& id, const Json& b) { return submit_judgement(id, b); }));
    server.Post(R"(/assessments/([^/]+)/moderations)",
                with_body([this](const std::string& id, const Json& b) { return moderate(id, b); }));
    server.Post(R"(/assessments/([^/]+)/reopen)",
                with_body([this](const std::string& id, const Json& b) { return reopen(id, b); }));
    server.Get(R"(/assessments/([^/]+)/report)", without_body([this](const std::string& id) { return report(id); }));
    server.Get(R"(/assessments/([^/]+)/export)",
               without_body([this](const std::string& id) { return export_snapshot(id); }));
    server.Get("/health", [reply](const httplib::Request&, httplib::Response& res) {
        reply(res, {200, Json{{"ok", true}}});
    });
    server.set_exception_handler([reply](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        reply(res, error_response(500, "internal", what));
    });
}

int serve(const ServiceConfig& config, const std::string& host, int port) {
    SessionService service(config);
    httplib::Server server;
    service.mount(server);
    if (!server.listen(host, port)) return 3;
    return 0;
}

}  // namespace bcj
