#pragma once
// Ground-truth marks, stratified subsampling and the simulated assessor.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bcj/random.hpp"

namespace bcj {

struct MarkScale {
    double min = 0.0;
    double max = 5.0;
};

// Named simulator settings: "relaxed" (sigma 0.5 on a 0-5 scale) and
// "strict" (sigma 3 marks on a 0-100 scale).
struct SimulatorProfile {
    std::string name = "relaxed";
    MarkScale scale{0.0, 5.0};
    double sigma = 0.5;
};

SimulatorProfile simulator_profile(const std::string& name);

struct MarkedItem {
    std::string external_key;
    std::vector<double> marks;  // per criterion
    std::vector<double> sigma;  // per criterion
};

struct MarkSet {
    std::vector<std::string> criteria;
    MarkScale scale;
    std::vector<MarkedItem> items;
};

// Parses CSV marks. The header names the criteria; an optional leading
// column called id, key, external_key or item carries the item key. Every
// mark must be numeric and within `scale`. Lines starting with # are skipped.
MarkSet ingest_marks(std::istream& csv, const MarkScale& scale, double sigma);
MarkSet ingest_marks_file(const std::string& path, const MarkScale& scale, double sigma);

void write_marks_csv(std::ostream& out, const MarkSet& marks);

enum class MarkDistribution { Uniform, Normal };

// Synthetic marks: uniform over the scale, or Normal centred mid-scale with
// sd = range / 6, clamped to the scale.
MarkSet generate_marks(std::size_t count, std::size_t criteria, const MarkScale& scale, double sigma,
                       MarkDistribution distribution, std::uint64_t seed);

// Sum_d lambda_d * mark_d.
double overall_mark(const MarkedItem& item, std::span<const double> weights);
double overall_sigma(const MarkedItem& item, std::span<const double> weights);

// N equal-width strata over the overall mark, one uniform draw per stratum;
// empty strata borrow from the nearest stratum with items left. Result keeps
// the input order.
std::vector<MarkedItem> stratified_subsample(const std::vector<MarkedItem>& items, std::size_t n,
                                             std::span<const double> weights, std::uint64_t seed);

// x_i ~ N(mu_i, sigma_i), x_j ~ N(mu_j, sigma_j); true when i wins (x_i >= x_j).
bool simulate_winner(double mu_i, double sigma_i, double mu_j, double sigma_j, Rng& rng);

// Per-criterion decision between two marked items; criterion < 0 judges the
// weighted overall mark.
bool simulate_decision(const MarkedItem& i, const MarkedItem& j, int criterion, std::span<const double> weights,
                       Rng& rng);

// Items ordered by descending overall mark, ties by position.
std::vector<int> truth_order(const std::vector<MarkedItem>& items, std::span<const double> weights);

}  // namespace bcj
