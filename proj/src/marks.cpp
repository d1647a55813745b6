#include "bcj/marks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "bcj/prefgraph.hpp"

namespace bcj {
namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Splits one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cur += '"';
                ++k;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool is_key_column(std::string name) {
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    return name == "id" || name == "key" || name == "external_key" || name == "item";
}

std::string quote_csv(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

SimulatorProfile simulator_profile(const std::string& name) {
    if (name == "relaxed") return {"relaxed", {0.0, 5.0}, 0.5};
    if (name == "strict") return {"strict", {0.0, 100.0}, 3.0};
    throw ValidationError("bad_profile", "unknown simulator profile '" + name + "' (expected relaxed or strict)");
}

MarkSet ingest_marks(std::istream& csv, const MarkScale& scale, double sigma) {
    if (!(scale.max > scale.min)) throw ValidationError("bad_scale", "mark scale needs max > min");
    if (!(sigma >= 0.0)) throw ValidationError("bad_sigma", "simulator sigma must be >= 0");
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(csv, line)) {
        ++line_no;
        if (!trim(line).empty() && trim(line).front() != '#') {
            header = split_csv(line);
            break;
        }
    }
    if (header.empty()) throw ValidationError("empty_marks", "marks file is empty");
    const bool has_key = is_key_column(header.front());
    MarkSet set;
    set.scale = scale;
    set.criteria.assign(header.begin() + (has_key ? 1 : 0), header.end());
    if (set.criteria.empty()) throw ValidationError("no_criteria", "marks file names no criterion columns");
    for (const auto& c : set.criteria) {
        if (c.empty()) throw ValidationError("bad_header", "empty criterion name in header");
    }

    while (std::getline(csv, line)) {
        ++line_no;
        if (trim(line).empty() || trim(line).front() == '#') continue;  // comment lines

        const auto fields = split_csv(line);
        if (fields.size() != header.size()) {
            throw ValidationError("malformed_row", "line " + std::to_string(line_no) + ": expected " +
                                                       std::to_string(header.size()) + " columns, found " +
                                                       std::to_string(fields.size()));
        }
        MarkedItem item;
        item.external_key = has_key ? fields.front() : "row-" + std::to_string(set.items.size());
        for (std::size_t c = has_key ? 1 : 0; c < fields.size(); ++c) {
            double v = 0.0;
            if (!parse_double(fields[c], v)) {
                throw ValidationError("non_numeric", "line " + std::to_string(line_no) + ": mark '" + fields[c] +
                                                         "' is not numeric");
            }
            if (v < scale.min || v > scale.max) {
                throw ValidationError("out_of_scale", "line " + std::to_string(line_no) + ": mark " + fields[c] +
                                                          " outside scale");
            }
            item.marks.push_back(v);
        }
        item.sigma.assign(item.marks.size(), sigma);
        set.items.push_back(std::move(item));
    }
    if (set.items.empty()) throw ValidationError("empty_marks", "marks file has no data rows");
    return set;
}

MarkSet ingest_marks_file(const std::string& path, const MarkScale& scale, double sigma) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open marks file '" + path + "'");
    return ingest_marks(in, scale, sigma);
}

void write_marks_csv(std::ostream& out, const MarkSet& marks) {
    out << "id";
    for (const auto& c : marks.criteria) out << ',' << quote_csv(c);
    out << '\n';
    for (const auto& item : marks.items) {
        out << quote_csv(item.external_key);
        for (double m : item.marks) out << ',' << m;
        out << '\n';
    }
}

MarkSet generate_marks(std::size_t count, std::size_t criteria, const MarkScale& scale, double sigma,
                       MarkDistribution distribution, std::uint64_t seed) {
    if (count == 0 || criteria == 0) throw ValidationError("bad_size", "need at least one item and one criterion");
    if (!(scale.max > scale.min)) throw ValidationError("bad_scale", "mark scale needs max > min");
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(scale.min, scale.max);
    std::normal_distribution<double> normal(0.5 * (scale.min + scale.max), (scale.max - scale.min) / 6.0);
    MarkSet set;
    set.scale = scale;
    for (std::size_t d = 0; d < criteria; ++d) set.criteria.push_back("criterion_" + std::to_string(d));
    for (std::size_t k = 0; k < count; ++k) {
        MarkedItem item;
        item.external_key = "item-" + std::to_string(k);
        for (std::size_t d = 0; d < criteria; ++d) {
            double v = distribution == MarkDistribution::Uniform ? unif(rng) : normal(rng);
            // Round to 2 decimals so the CSV round-trip is exact enough to re-ingest.
            v = std::round(std::clamp(v, scale.min, scale.max) * 100.0) / 100.0;
            item.marks.push_back(v);
        }
        item.sigma.assign(criteria, sigma);
        set.items.push_back(std::move(item));
    }
    return set;
}

double overall_mark(const MarkedItem& item, std::span<const double> weights) {
    double s = 0.0;
    for (std::size_t d = 0; d < item.marks.size() && d < weights.size(); ++d) s += weights[d] * item.marks[d];
    return s;
}

double overall_sigma(const MarkedItem& item, std::span<const double> weights) {
    double s = 0.0;
    for (std::size_t d = 0; d < item.sigma.size() && d < weights.size(); ++d) s += weights[d] * item.sigma[d];
    return s;
}

std::vector<MarkedItem> stratified_subsample(const std::vector<MarkedItem>& items, std::size_t n,
                                             std::span<const double> weights, std::uint64_t seed) {
    if (n > items.size()) {
        throw ValidationError("sample_too_large", "cannot draw " + std::to_string(n) + " items from " +
                                                      std::to_string(items.size()));
    }
    if (n == 0) return {};
    std::vector<double> overall(items.size());
    for (std::size_t k = 0; k < items.size(); ++k) overall[k] = overall_mark(items[k], weights);
    const auto [lo_it, hi_it] = std::minmax_element(overall.begin(), overall.end());
    const double lo = *lo_it;
    const double hi = *hi_it;

    std::vector<std::vector<std::size_t>> strata(n);
    for (std::size_t k = 0; k < items.size(); ++k) {
        std::size_t s = 0;
        if (hi > lo) {
            s = static_cast<std::size_t>(std::floor((overall[k] - lo) / (hi - lo) * static_cast<double>(n)));
            s = std::min(s, n - 1);
        }
        strata[s].push_back(k);
    }

    Rng rng(seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    auto take_from = [&](std::size_t s) {
        auto& bucket = strata[s];
        std::uniform_int_distribution<std::size_t> pick(0, bucket.size() - 1);
        const std::size_t at = pick(rng);
        chosen.push_back(bucket[at]);
        bucket.erase(bucket.begin() + static_cast<std::ptrdiff_t>(at));
    };
    for (std::size_t s = 0; s < n; ++s) {
        if (!strata[s].empty()) {
            take_from(s);
            continue;
        }
        for (std::size_t dist = 1; dist < n; ++dist) {
            if (s >= dist && !strata[s - dist].empty()) {
                take_from(s - dist);
                break;
            }
            if (s + dist < n && !strata[s + dist].empty()) {
                take_from(s + dist);
                break;
            }
        }
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<MarkedItem> out;
    out.reserve(n);
    for (std::size_t k : chosen) out.push_back(items[k]);
    return out;
}

bool simulate_winner(double mu_i, double sigma_i, double mu_j, double sigma_j, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    const double xi = mu_i + sigma_i * z(rng);
    const double xj = mu_j + sigma_j * z(rng);
    return xi >= xj;
}

bool simulate_decision(const MarkedItem& i, const MarkedItem& j, int criterion, std::span<const double> weights,
                       Rng& rng) {
    if (criterion < 0) {
        return simulate_winner(overall_mark(i, weights), overall_sigma(i, weights), overall_mark(j, weights),
                               overall_sigma(j, weights), rng);
    }
    const auto d = static_cast<std::size_t>(criterion);
    return simulate_winner(i.marks.at(d), i.sigma.at(d), j.marks.at(d), j.sigma.at(d), rng);
}

std::vector<int> truth_order(const std::vector<MarkedItem>& items, std::span<const double> weights) {
    std::vector<int> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return overall_mark(items[static_cast<std::size_t>(a)], weights) >
               overall_mark(items[static_cast<std::size_t>(b)], weights);
    });
    return order;
}

}  // namespace bcj
