#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "bcj/experiment.hpp"
#include "bcj/rankgen.hpp"
#include "bcj/reliability.hpp"
#include "bcj/serialization.hpp"
#include "bcj/service.hpp"
#include "bcj/stats.hpp"

namespace bcj::cli {
namespace fs = std::filesystem;

namespace {

// Raised for bad input files or arguments found after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::is_regular_file(path)) throw UsageError(what + " '" + path + "' not found");
}

// Output sink: a file when --out is given, stdout otherwise.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_.open(path, std::ios::trunc);
            if (!file_) throw UsageError("cannot write '" + path + "'");
            stream_ = &file_;
        }
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

// A judgement log plus what is needed to rank it.
struct LoadedLog {
    std::vector<JudgementRecord> records;
    LogMeta meta;
    bool has_meta = false;
    PreferenceMatrix matrix;
};

struct LogInputs {
    std::string log;
    std::string meta;
    std::size_t items = 0;
    std::vector<double> weights;
    std::string aggregator;
};

void add_log_options(CLI::App* cmd, LogInputs& in) {
    cmd->add_option("--log", in.log, "Judgement log (JSON lines)")->required();
    cmd->add_option("--meta", in.meta, "Side-car metadata (default: <log>.meta.json when present)");
    cmd->add_option("--items", in.items, "Item count, when there is no metadata");
    cmd->add_option("--weights", in.weights, "Criterion weights, when there is no metadata")->delimiter(',');
    cmd->add_option("--aggregator", in.aggregator, "bcj | mcr | mcp (default from metadata, else mcp)");
}

LoadedLog load_log(const LogInputs& in) {
    require_file(in.log, "log file");
    LoadedLog out;
    std::ifstream log_in(in.log);
    out.records = read_judgement_log(log_in);

    std::string meta_path = in.meta;
    if (meta_path.empty() && fs::is_regular_file(in.log + ".meta.json")) meta_path = in.log + ".meta.json";
    if (!meta_path.empty()) {
        require_file(meta_path, "metadata file");
        std::ifstream meta_in(meta_path);
        try {
            out.meta = log_meta_from_json(Json::parse(meta_in));
        } catch (const Json::exception& e) {
            throw ValidationError("malformed_meta", std::string("metadata: ") + e.what());
        }
        out.has_meta = true;
    } else {
        out.meta.aggregator = "mcp";
    }
    if (in.items > 0) out.meta.n_items = in.items;
    if (!in.weights.empty()) out.meta.weights = in.weights;
    if (!in.aggregator.empty()) out.meta.aggregator = in.aggregator;
    if (out.meta.n_items == 0) {
        for (const auto& r : out.records) {
            out.meta.n_items = std::max<std::size_t>(out.meta.n_items, std::max(r.pair.first, r.pair.second) + 1);
        }
        if (out.meta.n_items < 2) throw UsageError("item count unknown: pass --items or --meta");
    }
    validate_weights(out.meta.weights);
    out.matrix = replay(out.meta.n_items, out.meta.weights.size(), out.records);
    return out;
}

Aggregator aggregator_from(const std::string& name) {
    return strategy_from_string(name + "-entropy").aggregator;
}

Ranking holistic_ranking(const LoadedLog& log, bool with_distributions) {
    const auto agg = aggregator_from(log.meta.aggregator);
    const auto& w = log.meta.weights;
    switch (agg) {
        case Aggregator::Bcj: return expected_ranking(log.matrix, 0, with_distributions);
        case Aggregator::Mcr: return mcr_ranking(log.matrix, w, with_distributions);
        case Aggregator::Mcp: {
            McpOptions o;
            o.with_distributions = with_distributions;
            return mcp_ranking(log.matrix, w, o);
        }
    }
    return expected_ranking(log.matrix, 0, with_distributions);
}

std::string order_csv(const std::vector<int>& order) {
    std::string s;
    for (std::size_t k = 0; k < order.size(); ++k) s += (k ? ";" : "") + std::to_string(order[k]);
    return s;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
    std::string marks;
    std::size_t synthetic = 0;
    std::size_t criteria = 3;
    std::string distribution = "uniform";
    std::string profile = "relaxed";
    std::optional<double> sigma;
    std::vector<std::size_t> n{10};
    std::vector<std::size_t> k{10};
    std::vector<std::string> strategies;
    std::size_t trials = 50;
    std::uint64_t seed = kDefaultSeed;
    std::vector<double> weights;
    std::size_t qmc = 0;
    std::size_t qmc_skip = 0;
    std::size_t jobs = 1;
    std::string out_dir;
    bool keep_logs = false;
    std::string format = "csv";
};

MarkDistribution distribution_from(const std::string& s) {
    if (s == "uniform") return MarkDistribution::Uniform;
    if (s == "normal") return MarkDistribution::Normal;
    throw UsageError("distribution must be uniform or normal");
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const SimulatorProfile profile = simulator_profile(a.profile);
    const double sigma = a.sigma.value_or(profile.sigma);
    MarkSet marks;
    if (!a.marks.empty()) {
        require_file(a.marks, "marks file");
        marks = ingest_marks_file(a.marks, profile.scale, sigma);
    } else if (a.synthetic > 0) {
        marks = generate_marks(a.synthetic, a.criteria, profile.scale, sigma, distribution_from(a.distribution),
                               derive_seed({a.seed, 0x6d61726bULL}));
    } else {
        throw UsageError("simulate needs --marks FILE or --synthetic COUNT");
    }

    ExperimentGrid grid;
    grid.n_values = a.n;
    grid.k_values = a.k;
    grid.trials = a.trials;
    grid.base_seed = a.seed;
    grid.keep_logs = a.keep_logs;
    grid.record_trajectories = true;
    if (!a.strategies.empty()) {
        grid.strategies.clear();
        for (const auto& s : a.strategies) grid.strategies.push_back(strategy_from_string(s));
    }
    if (a.qmc > 0) {
        grid.weights.qmc_points = a.qmc;
        grid.weights.skip = a.qmc_skip;
    } else if (!a.weights.empty()) {
        grid.weights.fixed = a.weights;
    } else {
        grid.weights.fixed.assign(marks.criteria.size(), 1.0 / static_cast<double>(marks.criteria.size()));
    }

    const auto results = run_experiment_grid(grid, marks, a.jobs);
    if (!a.out_dir.empty()) write_results_store(a.out_dir, grid, results);

    if (a.format == "json") {
        Json j;
        j["seed"] = a.seed;
        j["profile"] = profile.name;
        j["sigma"] = sigma;
        j["cells"] = Json::array();
        for (const auto& c : results.cells) {
            j["cells"].push_back({{"n", c.n},
                                  {"k", c.k},
                                  {"strategy", c.strategy},
                                  {"taus", c.taus},
                                  {"median_tau", c.median_tau},
                                  {"losses", c.losses},
                                  {"ssr_mean", c.ssr_mean},
                                  {"error", c.error}});
        }
        out << j.dump(2) << '\n';
    } else {
        out << "# seed=" << a.seed << " profile=" << profile.name << " sigma=" << fmt(sigma) << '\n';
        out << "N,K,strategy,median_tau,losses,ssr_mean,trials,error\n";
        for (const auto& c : results.cells) {
            out << c.n << ',' << c.k << ',' << c.strategy << ',' << fmt(c.median_tau) << ',' << c.losses << ','
                << fmt(c.ssr_mean) << ',' << c.taus.size() << ',' << c.error << '\n';
        }
    }
    for (const auto& c : results.cells) {
        if (!c.error.empty()) return kExitRuntime;
    }
    return kExitOk;
}

// ---- report / rank / reliability -----------------------------------------

int cmd_report(const LogInputs& in, double flag_threshold, const std::string& format, std::ostream& out) {
    const auto log = load_log(in);
    const auto holistic = holistic_ranking(log, true);
    const auto flagged = flag_low_agreement(log.matrix, flag_threshold);
    if (format == "json") {
        Json j;
        j["seed"] = log.meta.seed;
        j["n_items"] = log.meta.n_items;
        j["aggregator"] = log.meta.aggregator;
        j["weights"] = log.meta.weights;
        j["judgements"] = log.records.size();
        j["holistic"] = ranking_to_json(holistic);
        j["per_criterion"] = Json::array();
        for (std::size_t d = 0; d < log.matrix.criterion_count(); ++d) {
            Json r = ranking_to_json(expected_ranking(log.matrix, d, true));
            r["criterion"] = d;
            j["per_criterion"].push_back(std::move(r));
        }
        j["reliability"] = reliability_to_json(log.matrix, flag_threshold);
        j["flagged"] = Json::array();
        for (const auto& f : flagged) j["flagged"].push_back(agreement_to_json(f));
        if (log.has_meta && !log.meta.final_order.empty()) {
            j["matches_recorded_order"] = holistic.order == log.meta.final_order;
        }
        out << j.dump(2) << '\n';
        return kExitOk;
    }
    out << "# seed=" << log.meta.seed << " aggregator=" << log.meta.aggregator << " judgements=" << log.records.size()
        << '\n';
    out << "# holistic order=" << order_csv(holistic.order) << '\n';
    out << ranking_to_csv(holistic);
    for (std::size_t d = 0; d < log.matrix.criterion_count(); ++d) {
        const auto r = expected_ranking(log.matrix, d, true);
        out << "# criterion " << d << " order=" << order_csv(r.order) << '\n';
        out << ranking_to_csv(r);
    }
    out << "# reliability flag_threshold=" << fmt(flag_threshold) << '\n';
    out << reliability_to_csv(log.matrix, flag_threshold);
    out << "# flagged\n";
    out << "i,j,d,eap\n";
    for (const auto& f : flagged) {
        out << f.pair.first << ',' << f.pair.second << ',' << f.criterion << ',' << fmt(f.eap_pct) << '\n';
    }
    return kExitOk;
}

int cmd_rank(const LogInputs& in, std::size_t mc_samples, std::uint64_t seed, const std::string& format,
             std::ostream& out) {
    const auto log = load_log(in);
    Ranking ranking;
    if (mc_samples > 0) {
        McpOptions o;
        o.mode = McpMode::MonteCarlo;
        o.samples = mc_samples;
        o.seed = seed;
        o.with_distributions = true;
        ranking = mcp_ranking(log.matrix, log.meta.weights, o);
    } else {
        ranking = holistic_ranking(log, true);
    }
    if (format == "json") {
        Json j = ranking_to_json(ranking);
        j["seed"] = mc_samples > 0 ? seed : log.meta.seed;
        j["aggregator"] = mc_samples > 0 ? "mcp-mc" : log.meta.aggregator;
        out << j.dump(2) << '\n';
    } else {
        out << "# seed=" << (mc_samples > 0 ? seed : log.meta.seed) << " order=" << order_csv(ranking.order) << '\n';
        out << ranking_to_csv(ranking);
    }
    return kExitOk;
}

int cmd_reliability(const LogInputs& in, double flag_threshold, const std::string& format, std::ostream& out) {
    const auto log = load_log(in);
    if (format == "json") {
        out << reliability_to_json(log.matrix, flag_threshold).dump(2) << '\n';
    } else {
        out << reliability_to_csv(log.matrix, flag_threshold);
    }
    return kExitOk;
}

// ---- weights / gen-marks / serve -------------------------------------------

int cmd_weights(std::size_t dims, std::size_t count, std::size_t skip, const std::string& format, std::ostream& out) {
    const auto w = halton_simplex_weights(dims, count, skip);
    if (format == "json") {
        out << Json{{"criteria", dims}, {"skip", skip}, {"weights", w}}.dump(2) << '\n';
        return kExitOk;
    }
    out << "index";
    for (std::size_t d = 0; d < dims; ++d) out << ",w" << d;
    out << '\n';
    for (std::size_t k = 0; k < w.size(); ++k) {
        out << skip + k;
        for (double v : w[k]) out << ',' << fmt(v);
        out << '\n';
    }
    return kExitOk;
}

int cmd_gen_marks(std::size_t count, const std::vector<std::string>& names, const std::string& profile_name,
                  const std::string& distribution, std::uint64_t seed, std::ostream& out) {
    const auto profile = simulator_profile(profile_name);
    auto marks = generate_marks(count, names.size(), profile.scale, profile.sigma, distribution_from(distribution),
                                seed);
    marks.criteria = names;
    out << "# seed=" << seed << " profile=" << profile.name << " distribution=" << distribution << '\n';
    write_marks_csv(out, marks);
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian comparative judgement toolkit", "bcj"};
    app.require_subcommand(1);
    std::string format = "csv";
    std::string out_path;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
        cmd->add_option("--out", out_path, "Write output to a file instead of stdout");
    };

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run a strategy grid against simulated assessors");
    simulate->add_option("--marks", sim.marks, "Marks CSV");
    simulate->add_option("--synthetic", sim.synthetic, "Generate this many synthetic items instead of --marks");
    simulate->add_option("--criteria", sim.criteria, "Criteria for synthetic marks");
    simulate->add_option("--distribution", sim.distribution, "uniform | normal (synthetic marks)");
    simulate->add_option("--profile", sim.profile, "relaxed | strict")->check(CLI::IsMember({"relaxed", "strict"}));
    simulate->add_option("--sigma", sim.sigma, "Override the profile's assessor noise");
    simulate->add_option("--n", sim.n, "Sample sizes")->delimiter(',');
    simulate->add_option("--k", sim.k, "Budget multipliers")->delimiter(',');
    simulate->add_option("--strategy", sim.strategies, "Strategies such as mcp-entropy (default: all seven)")
        ->delimiter(',');
    simulate->add_option("--trials", sim.trials, "Trials per cell");
    simulate->add_option("--seed", sim.seed, "Base seed")->default_val(kDefaultSeed);
    simulate->add_option("--weights", sim.weights, "Fixed criterion weights (default: equal)")->delimiter(',');
    simulate->add_option("--qmc", sim.qmc, "Halton simplex weight points instead of fixed weights");
    simulate->add_option("--qmc-skip", sim.qmc_skip, "Halton points to skip");
    simulate->add_option("--jobs", sim.jobs, "Cells run in parallel")->check(CLI::PositiveNumber);
    simulate->add_option("--out", sim.out_dir, "Results store directory");
    simulate->add_flag("--keep-logs", sim.keep_logs, "Write every trial's judgement log to the store");
    simulate->add_option("--format", format, "Summary format on stdout: json | csv")
        ->check(CLI::IsMember({"json", "csv"}));

    LogInputs report_in;
    double flag_threshold = 50.0;
    auto* report = app.add_subcommand("report", "Rankings and reliability from a judgement log");
    add_log_options(report, report_in);
    report->add_option("--flag-threshold", flag_threshold, "EAP percentage below which pairs are flagged");
    add_common(report);

    LogInputs rank_in;
    std::size_t mc_samples = 0;
    std::uint64_t rank_seed = kDefaultSeed;
    auto* rank = app.add_subcommand("rank", "Holistic ranking from a judgement log");
    add_log_options(rank, rank_in);
    rank->add_option("--mc-samples", mc_samples, "Use the Monte Carlo preference mixture with this many draws");
    rank->add_option("--seed", rank_seed, "Seed for --mc-samples")->default_val(kDefaultSeed);
    add_common(rank);

    LogInputs rel_in;
    auto* reliability = app.add_subcommand("reliability", "Per-pair MAP/EAP matrix from a judgement log");
    add_log_options(reliability, rel_in);
    reliability->add_option("--flag-threshold", flag_threshold, "EAP percentage below which pairs are flagged");
    add_common(reliability);

    std::size_t w_dims = 3, w_count = 50, w_skip = 0;
    auto* weights = app.add_subcommand("weights", "Halton simplex weight sweep");
    weights->add_option("--criteria", w_dims, "Criteria (D >= 2)");
    weights->add_option("--count", w_count, "Number of weight vectors");
    weights->add_option("--skip", w_skip, "Halton points to skip");
    add_common(weights);

    std::size_t g_count = 100;
    std::vector<std::string> g_names{"content", "organisation", "language"};
    std::string g_profile = "relaxed", g_dist = "uniform";
    std::uint64_t g_seed = kDefaultSeed;
    auto* gen = app.add_subcommand("gen-marks", "Synthetic marks CSV");
    gen->add_option("--count", g_count, "Items");
    gen->add_option("--criteria", g_names, "Criterion names")->delimiter(',');
    gen->add_option("--profile", g_profile, "relaxed (0-5) | strict (0-100)")
        ->check(CLI::IsMember({"relaxed", "strict"}));
    gen->add_option("--distribution", g_dist, "uniform | normal")->check(CLI::IsMember({"uniform", "normal"}));
    gen->add_option("--seed", g_seed, "Seed")->default_val(kDefaultSeed);
    gen->add_option("--out", out_path, "Write output to a file instead of stdout");

    ServiceConfig svc = ServiceConfig::from_environment();
    std::string host = "127.0.0.1";
    int port = 8080;
    if (const char* v = std::getenv("BCJ_BIND")) host = v;
    if (const char* v = std::getenv("BCJ_PORT")) port = std::atoi(v);
    auto* serve_cmd = app.add_subcommand("serve", "Run the assessment HTTP service");
    serve_cmd->add_option("--host", host, "Bind address (env BCJ_BIND)");
    serve_cmd->add_option("--port", port, "Port (env BCJ_PORT)");
    serve_cmd->add_option("--data-dir", svc.data_dir, "Persistence directory (env BCJ_DATA_DIR)");
    serve_cmd->add_option("--snapshot-interval", svc.snapshot_interval, "Records between snapshots");
    serve_cmd->add_option("--token", svc.bearer_token, "Bearer token (env BCJ_TOKEN)");

    std::vector<const char*> argv{"bcj"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "bcj: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*serve_cmd) {
            err << "serving on " << host << ':' << port << '\n';
            return serve(svc, host, port);
        }
        if (*simulate) {
            sim.format = format;
            return cmd_simulate(sim, out);
        }
        Sink sink(out_path, out);
        if (*report) return cmd_report(report_in, flag_threshold, format, *sink);
        if (*rank) return cmd_rank(rank_in, mc_samples, rank_seed, format, *sink);
        if (*reliability) return cmd_reliability(rel_in, flag_threshold, format, *sink);
        if (*weights) return cmd_weights(w_dims, w_count, w_skip, format, *sink);
        if (*gen) return cmd_gen_marks(g_count, g_names, g_profile, g_dist, g_seed, *sink);
    } catch (const UsageError& e) {
        err << "bcj: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ValidationError& e) {
        err << "bcj: " << e.code() << ": " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "bcj: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace bcj::cli
