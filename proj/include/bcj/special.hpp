#pragma once
// Thin wrappers over Boost.Math for the Beta-family quantities used
// throughout the engine.

namespace bcj::special {

// Regularized incomplete beta I_x(a, b).
double beta_cdf(double x, double a, double b);

// ln B(a, b)
double log_beta(double a, double b);

double digamma(double x);

// Differential entropy of Beta(a, b), in nats.
double beta_entropy(double a, double b);

// Standard normal CDF.
double normal_cdf(double z);

}  // namespace bcj::special
