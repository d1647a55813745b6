#pragma once
// Per-pair assessor agreement measured on the preference posterior.
//
//   MAP - how far the posterior mode sits from 0.5, as a percentage of the
//         maximum distance 0.5.
//   EAP - the same distance averaged over the whole posterior,
//         100 * E|p - 0.5| / 0.5, so it only approaches 100% once the
//         posterior is both decisive and concentrated.

#include <string>
#include <vector>

#include "bcj/prefgraph.hpp"

namespace bcj {

double map_metric(const PreferencePosterior& posterior);
double eap_metric(const PreferencePosterior& posterior);

// Interval around 0.5 that an agreement percentage places the preference
// outside of: l = 0.5 - 0.5 * pct / 100, u = 0.5 + 0.5 * pct / 100.
struct NullSpace {
    double lower = 0.5;
    double upper = 0.5;
};

NullSpace null_space_bounds(double metric_pct);
double threshold_from_bounds(const NullSpace& bounds);

struct AgreementScore {
    ItemPair pair;
    int criterion = 0;
    double map_pct = 0.0;
    double eap_pct = 0.0;
    std::int64_t n_observations = 0;
    bool moderated = false;
};

AgreementScore agreement(const PreferenceMatrix& matrix, std::size_t criterion, std::size_t pair_index);

// Every pair on every criterion, criterion-major then canonical pair order.
std::vector<AgreementScore> agreement_matrix(const PreferenceMatrix& matrix);

enum class AgreementMetric { Map, Eap };
enum class Aggregation { Min, Mean };

struct StoppingReport {
    bool stop = false;
    // Aggregated metric per criterion and the minimum across criteria.
    std::vector<double> per_criterion;
    double aggregate = 0.0;
    std::vector<AgreementScore> failing;  // pairs below the threshold
};

StoppingReport stopping_check(const PreferenceMatrix& matrix, AgreementMetric metric, double threshold_pct,
                              Aggregation aggregation = Aggregation::Min);

// Non-moderated pairs with EAP strictly below the threshold, ascending by EAP.
std::vector<AgreementScore> flag_low_agreement(const PreferenceMatrix& matrix, double eap_threshold_pct = 50.0);

struct ModerationRecord {
    ItemPair pair;
    int criterion = 0;
    int chosen_winner = 0;
    double pseudo_wins = 1000.0;
    std::string timestamp;
    std::string note;
};

void moderate_pair(PreferenceMatrix& matrix, const ModerationRecord& record);

}  // namespace bcj
