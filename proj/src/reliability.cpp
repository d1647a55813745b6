#include "bcj/reliability.hpp"

#include <algorithm>
#include <cmath>

#include "bcj/special.hpp"

namespace bcj {

double map_metric(const PreferencePosterior& posterior) {
    // Agreement is orientation-free; evaluate with the smaller shape first so
    // MAP(a, b) == MAP(b, a) bit for bit.
    const double a = std::min(posterior.alpha, posterior.beta);
    const double b = std::max(posterior.alpha, posterior.beta);
    if (a > 1.0) {
        const double mode = (a - 1.0) / (a + b - 2.0);
        return std::clamp(std::abs(mode - 0.5) / 0.5 * 100.0, 0.0, 100.0);
    }
    // No interior mode: uniform is maximal disagreement, otherwise the mode
    // sits on a boundary.
    return a == b ? 0.0 : 100.0;
}

double eap_metric(const PreferencePosterior& posterior) {
    const double a = std::min(posterior.alpha, posterior.beta);
    const double b = std::max(posterior.alpha, posterior.beta);
    // E|p - 0.5| = (mu - 0.5) + 2 E[(0.5 - p) 1{p < 0.5}]
    //            = mu - 0.5 + I_.5(a, b) - 2 mu I_.5(a + 1, b),  mu = a / (a + b).
    const double mu = a / (a + b);
    const double lower = special::beta_cdf(0.5, a, b);
    const double lower_shifted = special::beta_cdf(0.5, a + 1.0, b);
    const double mean_abs = (mu - 0.5) + lower - 2.0 * mu * lower_shifted;
    return std::clamp(mean_abs / 0.5 * 100.0, 0.0, 100.0);
}

NullSpace null_space_bounds(double metric_pct) {
    if (!(metric_pct >= 0.0 && metric_pct <= 100.0)) {
        throw ValidationError("bad_percentage", "agreement percentage must lie in [0, 100]");
    }
    // one correctly rounded division each: 95% gives exactly 0.025 and 0.975
    return {(100.0 - metric_pct) / 200.0, (100.0 + metric_pct) / 200.0};
}

double threshold_from_bounds(const NullSpace& bounds) {
    if (!(bounds.lower <= 0.5 && bounds.upper >= 0.5 && bounds.lower >= 0.0 && bounds.upper <= 1.0)) {
        throw ValidationError("bad_bounds", "null-space bounds must satisfy 0 <= l <= 0.5 <= u <= 1");
    }
    auto reproduces = [&](double x) {
        if (!(x >= 0.0 && x <= 100.0)) return false;
        const auto b = null_space_bounds(x);
        return b.lower == bounds.lower && b.upper == bounds.upper;
    };
    // Several thresholds can share one pair of bounds. Prefer the shortest
    // decimal among them, so 95 -> bounds -> 95 exactly.
    const double estimate = std::clamp(100.0 - 200.0 * bounds.lower, 0.0, 100.0);
    for (int places = 0; places <= 17; ++places) {
        const double scale = std::pow(10.0, places);
        const double base = std::round(estimate * scale);
        for (double d : {0.0, -1.0, 1.0}) {
            const double x = (base + d) / scale;
            if (reproduces(x)) return x;
        }
    }
    double lo = estimate, hi = estimate;
    for (int step = 0; step < 64; ++step) {
        if (reproduces(lo)) return lo;
        if (reproduces(hi)) return hi;
        lo = std::nextafter(lo, -1.0);
        hi = std::nextafter(hi, 101.0);
    }
    return estimate;
}

AgreementScore agreement(const PreferenceMatrix& matrix, std::size_t criterion, std::size_t index) {
    const auto& p = matrix.canonical(criterion, index);
    AgreementScore s;
    s.pair = pair_at(matrix.item_count(), index);
    s.criterion = static_cast<int>(criterion);
    s.map_pct = map_metric(p);
    s.eap_pct = eap_metric(p);
    s.n_observations = p.n_observations;
    s.moderated = matrix.is_moderated(criterion, index);
    return s;
}

std::vector<AgreementScore> agreement_matrix(const PreferenceMatrix& matrix) {
    std::vector<AgreementScore> out;
    out.reserve(matrix.posterior_count());
    for (std::size_t d = 0; d < matrix.criterion_count(); ++d) {
        for (std::size_t k = 0; k < matrix.pair_count(); ++k) out.push_back(agreement(matrix, d, k));
    }
    return out;
}

StoppingReport stopping_check(const PreferenceMatrix& matrix, AgreementMetric metric, double threshold_pct,
                              Aggregation aggregation) {
    if (!(threshold_pct >= 0.0 && threshold_pct <= 100.0)) {
        throw ValidationError("bad_percentage", "threshold must lie in [0, 100]");
    }
    StoppingReport report;
    report.aggregate = 100.0;
    for (std::size_t d = 0; d < matrix.criterion_count(); ++d) {
        double agg = aggregation == Aggregation::Min ? 100.0 : 0.0;
        for (std::size_t k = 0; k < matrix.pair_count(); ++k) {
            const auto s = agreement(matrix, d, k);
            const double v = metric == AgreementMetric::Map ? s.map_pct : s.eap_pct;
            if (aggregation == Aggregation::Min) {
                agg = std::min(agg, v);
            } else {
                agg += v;
            }
            if (v < threshold_pct) report.failing.push_back(s);
        }
        if (aggregation == Aggregation::Mean && matrix.pair_count() > 0) {
            agg /= static_cast<double>(matrix.pair_count());
        }
        report.per_criterion.push_back(agg);
        report.aggregate = std::min(report.aggregate, agg);
    }
    report.stop = report.aggregate >= threshold_pct;
    return report;
}

std::vector<AgreementScore> flag_low_agreement(const PreferenceMatrix& matrix, double eap_threshold_pct) {
    if (!(eap_threshold_pct >= 0.0 && eap_threshold_pct <= 100.0)) {
        throw ValidationError("bad_percentage", "threshold must lie in [0, 100]");
    }
    std::vector<AgreementScore> flagged;
    for (const auto& s : agreement_matrix(matrix)) {
        if (!s.moderated && s.eap_pct < eap_threshold_pct) flagged.push_back(s);
    }
    std::stable_sort(flagged.begin(), flagged.end(),
                     [](const AgreementScore& x, const AgreementScore& y) { return x.eap_pct < y.eap_pct; });
    return flagged;
}

void moderate_pair(PreferenceMatrix& matrix, const ModerationRecord& record) {
    if (record.criterion < 0 || static_cast<std::size_t>(record.criterion) >= matrix.criterion_count()) {
        throw ValidationError("bad_criterion", "criterion out of range");
    }
    if (!record.pair.contains(record.chosen_winner)) {
        throw ValidationError("winner_not_in_pair", "moderated winner must be one of the pair");
    }
    matrix.add_pseudo_wins(static_cast<std::size_t>(record.criterion), record.pair.first, record.pair.second,
                           record.chosen_winner, record.pseudo_wins);
}

}  // namespace bcj
