// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bcj/btm.hpp"
#include "bcj/experiment.hpp"
#include "bcj/marks.hpp"
#include "bcj/prefgraph.hpp"
#include "bcj/rankgen.hpp"
#include "bcj/reliability.hpp"
#include "bcj/selection.hpp"
#include "bcj/serialization.hpp"
#include "bcj/service.hpp"
#include "bcj/special.hpp"
#include "bcj/stats.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace bcj;

namespace {

// Pinned tolerances.
constexpr double kProbTol = 1e-9;
constexpr double kEntropyTol = 1e-6;
constexpr double kEapTol = 1e-6;
constexpr double kRankTol = 1e-12;
constexpr double kRankSumTol = 1e-6;
constexpr double kSimplexTol = 1e-12;
constexpr double kBtmTol = 1e-6;
constexpr double kLoglikSlack = 1e-9;  // allowed dip per MM step (round-off only)
constexpr double kSpearmanCeiling = 0.9;
constexpr std::uint64_t kSeed = 20240601;

struct Check {
    bool ok = true;
    std::ostringstream detail;
    void require(bool cond, const std::string& what) {
        if (!cond && ok) detail << what;
        ok = ok && cond;
    }
};

int failures = 0;

void run(int id, const std::string& title, const std::function<void(Check&)>& body) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.ok = false;
        c.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s (%.1fs)%s%s\n", c.ok ? "PASS" : "FAIL", id, title.c_str(), secs,
                c.detail.str().empty() ? "" : " : ", c.detail.str().c_str());
    std::fflush(stdout);
    if (!c.ok) ++failures;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Exact 100 * E|p - 1/2| / (1/2) for integer shapes: expand the density into
// monomials and integrate each piece of |p - 1/2| in closed form.
double eap_piecewise(int a, int b) {
    // p^(a-1) (1-p)^(b-1) = sum_k C(b-1,k) (-1)^k p^(a-1+k)
    double norm = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b));
    double lower = 0.0, upper = 0.0;  // int_0^.5 (.5-p) f, int_.5^1 (p-.5) f
    double binom = 1.0;
    for (int k = 0; k <= b - 1; ++k) {
        if (k > 0) binom = binom * (b - k) / k;
        const double c = (k % 2 ? -1.0 : 1.0) * binom;
        const int e = a - 1 + k;
        const double h1 = std::pow(0.5, e + 1) / (e + 1), h2 = std::pow(0.5, e + 2) / (e + 2);
        const double f1 = 1.0 / (e + 1), f2 = 1.0 / (e + 2);
        lower += c * (0.5 * h1 - h2);
        upper += c * ((f2 - h2) - 0.5 * (f1 - h1));
    }
    return 100.0 * norm * (lower + upper) / 0.5;
}

std::vector<double> tau_of(const GridResults& r, const std::string& strategy, std::size_t k) {
    std::vector<double> t;
    for (const auto& c : r.cells)
        if (c.strategy == strategy && c.k == k) t = c.taus;
    return t;
}

}  // namespace

int main() {
    std::printf("acceptance: seed %llu\n", static_cast<unsigned long long>(kSeed));

    // Runs first: it forks, so no worker threads may exist yet.
    run(16, "service kill-and-replay reproduces the live matrix bit-exactly", [](Check& c) {
        const fs::path dir = fs::temp_directory_path() / "bcj_acceptance_service";
        fs::remove_all(dir);
        ServiceConfig cfg;
        cfg.data_dir = dir.string();
        cfg.snapshot_interval = 37;
        const fs::path live_path = dir / "live.json";
        const fs::path id_path = dir / "id.txt";
        fs::create_directories(dir);

        const pid_t pid = fork();
        if (pid == 0) {
            SessionService s(cfg);
            const auto created = s.create_assessment(
                {{"items", 12}, {"criteria", {{{"name", "a"}, {"weight", 0.5}}, {{"name", "b"}, {"weight", 0.5}}}},
                 {"strategy", "entropy"}, {"seed", 5}});
            const std::string id = created.body["id"];
            std::ofstream(id_path) << id;
            std::mt19937_64 rng(99);
            int judged = 0;
            while (judged < 100) {
                const auto next = s.next_pair(id).body;
                if (next["stop"].get<bool>()) _exit(4);
                const int i = next["pair"][0], j = next["pair"][1];
                Json winners = Json::array();
                for (int d = 0; d < 2; ++d) winners.push_back((rng() % 3 == 0) ? j : i);
                if (s.submit_judgement(id, {{"pair", {i, j}}, {"winners", winners}}).status != 200) _exit(5);
                judged += 2;
                if (judged == 40) s.moderate(id, {{"pair", {i, j}}, {"winner", j}, {"pseudo_wins", 1000}});
            }
            std::ofstream(live_path) << s.export_snapshot(id).body.dump();
            std::ofstream(live_path, std::ios::app).flush();
            raise(SIGKILL);
            _exit(6);
        }
        int status = 0;
        waitpid(pid, &status, 0);
        c.require(WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL, "child was not killed");
        if (!c.ok) return;
        std::string id;
        std::ifstream(id_path) >> id;
        const Json live = Json::parse(std::ifstream(live_path));
        SessionService restarted(cfg);
        const Json replayed = restarted.export_snapshot(id).body;
        const Assessment a = snapshot_from_json(live), b = snapshot_from_json(replayed);
        c.require(a.matrix == b.matrix, "replayed matrix differs from the live one");
        c.require(live == replayed, "exported snapshots differ");
        std::ifstream log_in(dir / id / "log.jsonl");
        const auto log = read_judgement_log(log_in);
        std::size_t humans = 0;
        for (const auto& r : log) humans += r.source == JudgementSource::Human;
        c.require(humans == 100, "log holds " + std::to_string(humans) + " judgements");
        c.require(replay(12, 2, log) == a.matrix, "direct log replay differs");
        fs::remove_all(dir);
    });

    run(1, "prob_preferred fixture and swap symmetry", [](Check& c) {
        c.require(std::abs(prob_preferred({2, 1, 1}) - 0.75) <= kProbTol, "P(Beta(2,1)) != 0.75");
        std::mt19937_64 rng(kSeed);
        std::uniform_real_distribution<double> shape(0.05, 500.0);
        for (int t = 0; t < 1000; ++t) {
            const double a = shape(rng), b = shape(rng);
            const double s = prob_preferred({a, b, 0}) + prob_preferred({b, a, 0});
            c.require(s == 1.0, "asymmetric at (" + num(a) + "," + num(b) + ")");
        }
    });

    run(2, "beta entropy closed form vs quadrature", [](Check& c) {
        const double shapes[] = {1, 2, 5, 10, 50, 200};
        double worst = 0;
        for (double a : shapes)
            for (double b : shapes) worst = std::max(worst, std::abs(special::beta_entropy(a, b) - oracle::beta_entropy(a, b)));
        c.require(worst < kEntropyTol, "max |diff| " + num(worst));
        c.require(special::beta_entropy(1, 1) == 0.0, "H(Beta(1,1)) = " + num(special::beta_entropy(1, 1)));
    });

    run(3, "EAP fixtures and quadrature grid", [](Check& c) {
        c.require(std::abs(eap_piecewise(1, 1) - 50.0) < kEapTol, "oracle Beta(1,1)");
        c.require(std::abs(eap_piecewise(2, 2) - 37.5) < kEapTol, "oracle Beta(2,2)");
        c.require(std::abs(eap_metric({1, 1, 0}) - eap_piecewise(1, 1)) < kEapTol, "EAP Beta(1,1)");
        c.require(std::abs(eap_metric({2, 2, 0}) - eap_piecewise(2, 2)) < kEapTol, "EAP Beta(2,2)");
        const double shapes[] = {1, 2, 3, 7, 20, 100};
        double worst = 0;
        for (double a : shapes)
            for (double b : shapes) worst = std::max(worst, std::abs(eap_metric({a, b, 0}) - oracle::eap(a, b)));
        c.require(worst < kEapTol, "max |diff| on 36 shapes " + num(worst));
    });

    run(4, "MAP fixtures and null-space round trips", [](Check& c) {
        c.require(std::abs(map_metric({4, 2, 0}) - 50.0) < 1e-12, "MAP Beta(4,2) " + num(map_metric({4, 2, 0})));
        c.require(map_metric({2, 2, 0}) == 0.0, "MAP Beta(2,2)");
        const auto b50 = null_space_bounds(50), b95 = null_space_bounds(95);
        c.require(b50.lower == 0.25 && b50.upper == 0.75, "50% bounds");
        c.require(b95.lower == 0.025 && b95.upper == 0.975, "95% bounds");
        c.require(threshold_from_bounds({0.25, 0.75}) == 50.0, "bounds -> 50%");
        c.require(threshold_from_bounds({0.025, 0.975}) == 95.0, "bounds -> 95%");
        for (int x = 0; x <= 100; ++x)
            c.require(threshold_from_bounds(null_space_bounds(x)) == x, "round trip at " + std::to_string(x));
    });

    run(5, "rank distributions vs enumeration; expected-rank sum", [](Check& c) {
        std::mt19937_64 rng(kSeed + 5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst = 0;
        for (int n = 1; n <= 8; ++n) {
            for (int row = 0; row < 100; ++row) {
                std::vector<double> p(n - 1);
                for (auto& x : p) x = u(rng);
                const auto rd = rank_distribution(0, p);
                const auto ref = oracle::poisson_binomial_enumerate(p);
                for (int a = 0; a < n; ++a) worst = std::max(worst, std::abs(rd.pmf[a] - ref[a]));
            }
        }
        c.require(worst < kRankTol, "max |diff| " + num(worst));
        std::uniform_int_distribution<int> outcome(0, 1);
        for (int t = 0; t < 50; ++t) {
            const std::size_t n = 3 + t % 12;
            PreferenceMatrix m(n, 1);
            for (int k = 0; k < 40; ++k) {
                const int i = static_cast<int>(rng() % n);
                int j = static_cast<int>(rng() % (n - 1));
                if (j >= i) ++j;
                m.record(0, i, j, outcome(rng) ? i : j);
            }
            const auto r = expected_ranking(m, 0);
            const double sum = std::accumulate(r.expected_ranks.begin(), r.expected_ranks.end(), 0.0);
            c.require(std::abs(sum - n * (n + 1) / 2.0) < kRankSumTol, "rank sum " + num(sum));
        }
    });

    run(6, "Kendall tau fixture and brute force", [](Check& c) {
        const std::vector<int> truth{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
        const std::vector<int> est{1, 0, 2, 3, 5, 4, 6, 7, 9, 8};
        c.require(kendall_tau_normalized(truth, est) == 3.0 / 45, "fixture tau " + num(kendall_tau_normalized(truth, est)));
        char shown[16];
        std::snprintf(shown, sizeof shown, "%.2f", kendall_tau_normalized(truth, est));
        c.require(std::string(shown) == "0.07", "displays as " + std::string(shown));
        for (int n = 1; n <= 5; ++n) {
            std::vector<int> a(n);
            std::iota(a.begin(), a.end(), 0);
            std::vector<int> b = a;
            do {
                std::vector<int> t = a;
                do {
                    c.require(kendall_discordant_pairs(t, b) == oracle::kendall_brute_force(t, b), "brute force mismatch");
                } while (std::next_permutation(t.begin(), t.end()));
            } while (std::next_permutation(b.begin(), b.end()));
        }
    });

    run(7, "Wilcoxon fixture and Bonferroni", [](Check& c) {
        const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
        const auto w = wilcoxon_rank_sum(a, b, Alternative::Less, WilcoxonMethod::Exact);
        c.require(std::abs(w.p_value - 0.05) < 1e-12, "p = " + num(w.p_value));
        c.require(std::abs(oracle::wilcoxon_less_enumerate(a, b) - 0.05) < 1e-12, "oracle p");
        c.require(bonferroni_alpha(7) == 0.05 / 7, "bonferroni");
    });

    run(8, "Halton simplex weights", [](Check& c) {
        const auto first = halton_simplex_weights(3, 1).front();
        c.require(std::abs(first[0] - 1.0 / 3) < kSimplexTol && std::abs(first[1] - 1.0 / 6) < kSimplexTol &&
                      std::abs(first[2] - 0.5) < kSimplexTol,
                  "first point (" + num(first[0]) + "," + num(first[1]) + "," + num(first[2]) + ")");
        for (const auto& w : halton_simplex_weights(3, 1000)) {
            const double s = w[0] + w[1] + w[2];
            c.require(std::abs(s - 1.0) < kSimplexTol && *std::min_element(w.begin(), w.end()) >= 0.0, "off simplex");
        }
    });

    run(9, "Bradley-Terry 3:1 fixture and monotone MM", [](Check& c) {
        WinCounts wc(2);
        wc.at(0, 1) = 3;
        wc.at(1, 0) = 1;
        const auto fit = btm_fit(wc);
        const double p = fit.gamma[0] / (fit.gamma[0] + fit.gamma[1]);
        c.require(std::abs(p - 0.75) < kBtmTol, "fitted p = " + num(p));
        std::mt19937_64 rng(kSeed + 9);
        for (int inst = 0; inst < 50; ++inst) {
            const std::size_t n = 3 + inst % 8;
            WinCounts w(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (i != j) w.wins[i * n + j] = static_cast<double>(1 + rng() % 6);
            BtmOptions o;
            o.trace_loglik = true;
            o.tol = 1e-13;
            const auto f = btm_fit(w, o);
            for (std::size_t t = 1; t < f.loglik_trace.size(); ++t)
                c.require(f.loglik_trace[t] >= f.loglik_trace[t - 1] - kLoglikSlack,
                          "log-likelihood fell at instance " + std::to_string(inst));
            c.require(f.loglik_trace.size() >= 2, "no trace");
        }
    });

    run(10, "reliability dynamics on all-wins and alternating streams", [](Check& c) {
        PreferencePosterior p{1, 1, 0};
        double prev = eap_metric(p);
        for (int n = 1; n <= 30; ++n) {
            p.alpha += 1;
            p.n_observations += 1;
            const double e = eap_metric(p);
            if (n >= 2) c.require(e > prev, "EAP not increasing at n = " + std::to_string(n));
            else c.require(std::abs(e - prev) < 1e-12, "EAP moved at n = 1");
            if (n == 4) {
                c.require(e < 99.0, "EAP at n=4 is " + num(e));
                c.require(map_metric(p) >= 99.0, "MAP at n=4 is " + num(map_metric(p)));
            }
            prev = e;
        }
        PreferencePosterior q{1, 1, 0};
        for (int n = 1; n <= 60; ++n) {
            (n % 2 ? q.alpha : q.beta) += 1;
            if (n % 2 == 0) c.require(eap_metric(q) < 50.0, "alternating EAP >= 50 at n = " + std::to_string(n));
        }
    });

    // Synthetic three-criterion marks shared by the statistical criteria.
    const MarkScale scale;
    const auto relaxed = simulator_profile("relaxed");
    const MarkSet marks = generate_marks(300, 3, scale, relaxed.sigma, MarkDistribution::Uniform, kSeed);

    run(11, "oracle moderation of low-EAP pairs never worsens tau", [&](Check& c) {
        ExperimentGrid g;
        g.n_values = {10};
        g.k_values = {10};
        g.strategies = {strategy_from_string("bcj-entropy")};
        g.weights.fixed = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        g.keep_logs = true;
        g.record_trajectories = false;
        g.base_seed = kSeed + 11;
        std::map<std::string, const MarkedItem*> by_key;
        for (const auto& it : marks.items) by_key[it.external_key] = &it;
        int eligible = 0, improved = 0, worse = 0;
        for (std::size_t trial = 0; trial < 20; ++trial) {
            const auto tr = run_trial(g, marks, 10, 10, g.strategies[0], trial);
            auto m = replay(10, 1, tr.log);
            const double before = kendall_tau_normalized(tr.truth, expected_ranking(m, 0).order);
            for (const auto& s : flag_low_agreement(m, 50.0)) {
                const double mi = overall_mark(*by_key.at(tr.item_keys[s.pair.first]), tr.weights);
                const double mj = overall_mark(*by_key.at(tr.item_keys[s.pair.second]), tr.weights);
                ModerationRecord rec;
                rec.pair = s.pair;
                rec.criterion = 0;
                rec.chosen_winner = mi >= mj ? s.pair.first : s.pair.second;
                moderate_pair(m, rec);
            }
            const double after = kendall_tau_normalized(tr.truth, expected_ranking(m, 0).order);
            if (after > before) std::printf("     trial %zu: tau %.4f -> %.4f after moderation\n", trial, before, after);
            if (after > before) ++worse;
            if (before > 0) {
                ++eligible;
                if (after < before) ++improved;
            }
        }
        c.require(worse == 0, std::to_string(worse) + " runs got worse");
        c.require(eligible > 0 && 2 * improved > eligible,
                  "improved " + std::to_string(improved) + " of " + std::to_string(eligible));
        std::printf("     moderation: improved %d of %d runs with tau > 0, worse in %d\n", improved, eligible, worse);
    });

    run(12, "MCP+entropy not beaten by MCP+random", [&](Check& c) {
        ExperimentGrid g;
        g.n_values = {10};
        g.k_values = {10};
        g.strategies = {strategy_from_string("mcp-entropy"), strategy_from_string("mcp-random")};
        g.weights.fixed = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        g.trials = 50;
        g.record_trajectories = false;
        g.base_seed = kSeed + 12;
        const auto r = run_experiment_grid(g, marks);
        const auto ent = tau_of(r, "mcp-entropy", 10), rnd = tau_of(r, "mcp-random", 10);
        c.require(ent.size() == 50 && rnd.size() == 50, "missing trials");
        const double me = median(ent), mr = median(rnd);
        const double alpha = bonferroni_alpha(g.strategies.size());
        const auto w = wilcoxon_rank_sum(ent, rnd, Alternative::Greater);
        std::printf("     median tau entropy %.4f random %.4f; p(entropy worse) %.4f vs alpha %.4f\n", me, mr,
                    w.p_value, alpha);
        c.require(me <= mr, "median entropy " + num(me) + " > random " + num(mr));
        c.require(w.p_value >= alpha, "Wilcoxon rejects entropy as worse");
    });

    run(13, "degenerate weights reduce MCR and MCP to single-criterion ranking", [&](Check& c) {
        const std::vector<double> w{1.0, 0.0, 0.0};
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(derive_seed({kSeed, 13, seed}));
            const std::size_t n = 8;
            const auto items = stratified_subsample(marks.items, n, w, seed);
            DecisionSource decide = [&](ItemPair pair, int criterion) {
                return simulate_decision(items[pair.first], items[pair.second], criterion, {}, rng) ? pair.first
                                                                                                    : pair.second;
            };
            SessionOptions o;
            o.budget_multiplier = 5;
            o.seed = seed;
            o.strategy = seed % 2 ? SelectionStrategy::Random : SelectionStrategy::Entropy;
            o.record_trajectory = false;
            const auto session = run_session(n, 3, decide, default_ranker({1.0 / 3, 1.0 / 3, 1.0 / 3}), o);
            std::vector<JudgementRecord> single;
            for (auto r : session.log)
                if (r.criterion == 0) single.push_back(r);
            const auto bcj_rank = expected_ranking(replay(n, 1, single), 0);
            const auto mcr = mcr_ranking(session.matrix, w);
            const auto mcp = mcp_ranking(session.matrix, w);
            c.require(mcr.order == bcj_rank.order, "MCR order differs at seed " + std::to_string(seed));
            c.require(mcp.order == bcj_rank.order, "MCP order differs at seed " + std::to_string(seed));
            c.require(mcr.expected_ranks == bcj_rank.expected_ranks, "MCR ranks differ at seed " + std::to_string(seed));
            c.require(mcp.expected_ranks == bcj_rank.expected_ranks, "MCP ranks differ at seed " + std::to_string(seed));
        }
    });

    run(14, "noiseless simulator recovers the truth", [&](Check& c) {
        ExperimentGrid g;
        g.n_values = {5};
        g.k_values = {30};
        g.strategies = {strategy_from_string("bcj-entropy")};
        g.weights.fixed = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        g.trials = 20;
        g.sigma_override = 0.0;
        g.record_trajectories = false;
        g.base_seed = kSeed + 14;
        const auto r = run_experiment_grid(g, marks);
        const auto taus = tau_of(r, "bcj-entropy", 30);
        c.require(taus.size() == 20, "missing trials");
        for (double t : taus) c.require(t == 0.0, "tau " + num(t));
    });

    run(15, "SSR grows with budget but does not predict tau", [&](Check& c) {
        ExperimentGrid g;
        g.n_values = {10};
        g.k_values = {5, 10, 20, 30};
        g.strategies = {strategy_from_string("bcj-random")};
        g.weights.fixed = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        g.trials = 50;
        g.record_trajectories = false;
        g.base_seed = kSeed + 15;
        const auto r = run_experiment_grid(g, marks);
        std::map<std::size_t, std::pair<double, int>> acc;
        for (const auto& t : r.trials)
            if (!std::isnan(t.ssr)) {
                acc[t.k].first += t.ssr;
                acc[t.k].second += 1;
            }
        double prev = -1e300;
        std::string line;
        for (std::size_t k : g.k_values) {
            c.require(acc[k].second == 50, "SSR unavailable in some K=" + std::to_string(k) + " trials");
            const double mean = acc[k].first / acc[k].second;
            char buf[32];
            std::snprintf(buf, sizeof buf, " K%zu=%.4f", k, mean);
            line += buf;
            c.require(mean >= prev, "mean SSR fell at K=" + std::to_string(k));
            prev = mean;
        }

        g.n_values = {5};
        g.k_values = {10};
        g.base_seed = kSeed + 150;
        const auto r5 = run_experiment_grid(g, marks);
        std::vector<double> s, one_minus_tau;
        for (const auto& t : r5.trials)
            if (!std::isnan(t.ssr)) {
                s.push_back(t.ssr);
                one_minus_tau.push_back(1.0 - t.final_tau);
            }
        const double rho = spearman_correlation(s, one_minus_tau);
        std::printf("     mean SSR%s; spearman(SSR, 1 - tau) at N=5 K=10 = %.4f\n", line.c_str(), rho);
        c.require(s.size() >= 40, "too few SSR values");
        c.require(rho < kSpearmanCeiling, "rank correlation " + num(rho));
    });

    std::printf("%s: %d failing\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
