#pragma once
// Assessment service: JSON API over long-lived judging sessions.
//
// Each assessment is an append-only judgement log folded into a preference
// matrix. The log (fsync'd before any response) is the source of truth; a
// restarted service replays it from the prior. Requests for one assessment
// are serialized by a per-assessment mutex.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "bcj/reliability.hpp"
#include "bcj/serialization.hpp"

namespace httplib {
class Server;
}

namespace bcj {

struct ServiceConfig {
    std::string data_dir;              // empty keeps everything in memory
    std::size_t snapshot_interval = 50;  // records between matrix snapshots; 0 disables
    std::string bearer_token;          // empty disables the check

    // BCJ_DATA_DIR, BCJ_SNAPSHOT_INTERVAL, BCJ_TOKEN
    static ServiceConfig from_environment();
};

struct ApiResponse {
    int status = 200;
    Json body;
};

struct StoppingRule {
    AgreementMetric metric = AgreementMetric::Eap;
    double threshold = 100.0;
    Aggregation aggregation = Aggregation::Min;
};

enum class AssessmentStatus { Active, Stopped, Complete };

std::string to_string(AssessmentStatus s);

class SessionService {
public:
    explicit SessionService(ServiceConfig config = {});
    ~SessionService();

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    // POST /assessments
    ApiResponse create_assessment(const Json& body);
    // GET /assessments/{id}/next
    ApiResponse next_pair(const std::string& id);
    // POST /assessments/{id}/judgements  {pair, winners, idempotency_key?}
    ApiResponse submit_judgement(const std::string& id, const Json& body);
    // POST /assessments/{id}/moderations  {pair, winner, criterion?, pseudo_wins?, note?}
    ApiResponse moderate(const std::string& id, const Json& body);
    // POST /assessments/{id}/reopen  {threshold?}
    ApiResponse reopen(const std::string& id, const Json& body);
    // GET /assessments/{id}/report
    ApiResponse report(const std::string& id);
    // GET /assessments/{id}/export
    ApiResponse export_snapshot(const std::string& id);

    std::vector<std::string> assessment_ids() const;

    // Registers every route (and the bearer-token check) on `server`.
    void mount(httplib::Server& server);

    struct Session;

private:
    std::shared_ptr<Session> find(const std::string& id) const;
    void load_existing();

    ServiceConfig config_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

// Blocks serving HTTP on host:port until the process is stopped.
int serve(const ServiceConfig& config, const std::string& host, int port);

}  // namespace bcj
