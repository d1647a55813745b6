#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oracle {
namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double kronrod;
    double error;
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double k = fc * kWgk[7];
    double g = fc * kWg[3];
    for (int i = 0; i < 7; ++i) {
        const double x = h * kXgk[i];
        const double s = f(c - x) + f(c + x);
        k += kWgk[i] * s;
        if (i % 2 == 1) g += kWg[i / 2] * s;
    }
    return {k * h, std::abs((k - g) * h)};
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol, int depth) {
    const Segment s = gk15(f, a, b);
    // relative floor: log-density round-off (large shapes) is ~1e-13, and halved
    // tolerances below that noise never converge
    const double floor = 1e-12 * std::abs(s.kronrod);
    if (s.error <= std::max(tol, floor) || depth > 40 || b - a < 1e-15) return s.kronrod;
    const double m = 0.5 * (a + b);
    return adapt(f, a, m, 0.5 * tol, depth + 1) + adapt(f, m, b, 0.5 * tol, depth + 1);
}

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Splits [0, 1] at 0.5 and around the bulk of the mass so sharp peaks are bracketed.
std::vector<double> breakpoints(double a, double b) {
    std::vector<double> pts{0.0, 0.5, 1.0};
    const double sd = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));
    std::vector<double> centres{a / (a + b)};
    if (a > 1.0 && b > 1.0) centres.push_back((a - 1.0) / (a + b - 2.0));
    for (double m : centres) {
        for (double off : {-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0}) {
            const double x = m + off * sd;
            if (x > 0.0 && x < 1.0) pts.push_back(x);
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

// Segments touching a singular endpoint (shape < 1) are integrated after
// p = t^2 (or 1 - p = t^2), which removes a p^(-1/2)-type singularity.
using BetaIntegrand = std::function<double(double p, double q)>;

// log density with q = 1 - p supplied separately, so it stays accurate near 1
double log_pdf(double p, double q, double a, double b) {
    return (a - 1.0) * std::log(p) + (b - 1.0) * std::log(q) - log_beta_fn(a, b);
}

double integrate_beta(const BetaIntegrand& g, double a, double b, double lo, double hi) {
    auto pts = breakpoints(a, b);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double x0 = std::max(lo, pts[k]);
        const double x1 = std::min(hi, pts[k + 1]);
        if (!(x1 > x0)) continue;
        if (x0 == 0.0 && a < 1.0) {
            total += integrate([&](double t) { return t > 0.0 ? g(t * t, 1.0 - t * t) * 2.0 * t : 0.0; }, 0.0,
                               std::sqrt(x1), 1e-14);
        } else if (x1 == 1.0 && b < 1.0) {
            total += integrate([&](double t) { return t > 0.0 ? g(1.0 - t * t, t * t) * 2.0 * t : 0.0; }, 0.0,
                               std::sqrt(1.0 - x0), 1e-14);
        } else {
            total += integrate([&](double p) { return p > 0.0 && p < 1.0 ? g(p, 1.0 - p) : 0.0; }, x0, x1, 1e-14);
        }
    }
    return total;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    return adapt(f, a, b, tol, 0);
}

double beta_pdf(double p, double a, double b) {
    if (p <= 0.0 || p >= 1.0) {
        if (p == 0.0 && a == 1.0) return b;
        if (p == 1.0 && b == 1.0) return a;
        return 0.0;
    }
    return std::exp((a - 1.0) * std::log(p) + (b - 1.0) * std::log1p(-p) - log_beta_fn(a, b));
}

double prob_above_half(double a, double b) {
    return integrate_beta([&](double p, double q) { return std::exp(log_pdf(p, q, a, b)); }, a, b, 0.5, 1.0);
}

double beta_entropy(double a, double b) {
    return integrate_beta(
        [&](double p, double q) {
            const double lnf = log_pdf(p, q, a, b);
            return -std::exp(lnf) * lnf;
        },
        a, b, 0.0, 1.0);
}

double eap(double a, double b) {
    const double e = integrate_beta(
        [&](double p, double q) { return std::exp(log_pdf(p, q, a, b)) * std::abs(p - 0.5); }, a, b, 0.0, 1.0);
    return 100.0 * e / 0.5;
}

double beta_mode(double a, double b) {
    // bisection on the sign of d/dp log f; golden-section stalls near sqrt(eps)
    auto slope = [&](double p) { return (a - 1.0) / p - (b - 1.0) / (1.0 - p); };
    double lo = 1e-15, hi = 1.0 - 1e-15;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> poisson_binomial_enumerate(const std::vector<double>& probs) {
    const std::size_t n = probs.size();
    std::vector<double> pmf(n + 1, 0.0);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double p = 1.0;
        std::size_t k = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (mask & (std::size_t{1} << j)) {
                p *= probs[j];
                ++k;
            } else {
                p *= 1.0 - probs[j];
            }
        }
        pmf[k] += p;
    }
    return pmf;
}

std::size_t kendall_brute_force(const std::vector<int>& truth, const std::vector<int>& estimate) {
    const std::size_t n = truth.size();
    std::vector<std::size_t> pos_t(n), pos_e(n);
    for (std::size_t k = 0; k < n; ++k) {
        pos_t[static_cast<std::size_t>(truth[k])] = k;
        pos_e[static_cast<std::size_t>(estimate[k])] = k;
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool t = pos_t[i] < pos_t[j];
            const bool e = pos_e[i] < pos_e[j];
            if (t != e) ++d;
        }
    }
    return d;
}

double wilcoxon_less_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size();
    // mid-ranks
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        double below = 0.0, equal = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (pooled[j] < pooled[i]) below += 1.0;
            if (pooled[j] == pooled[i]) equal += 1.0;
        }
        ranks[i] = below + (equal + 1.0) / 2.0;
    }
    double observed = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) observed += ranks[i];

    std::vector<int> pick(n, 0);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(a.size()), 1);
    std::sort(pick.begin(), pick.end());
    std::size_t total = 0, at_most = 0;
    do {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (pick[i]) w += ranks[i];
        }
        ++total;
        if (w <= observed + 1e-9) ++at_most;
    } while (std::next_permutation(pick.begin(), pick.end()));
    return static_cast<double>(at_most) / static_cast<double>(total);
}

double btm_loglik(const std::vector<double>& gamma, const std::vector<std::vector<double>>& wins) {
    double l = 0.0;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        for (std::size_t j = 0; j < gamma.size(); ++j) {
            if (i == j || wins[i][j] == 0.0) continue;
            l += wins[i][j] * (std::log(gamma[i]) - std::log(gamma[i] + gamma[j]));
        }
    }
    return l;
}

}  // namespace oracle
