#pragma once

#include "leaklock/common.hpp"

namespace leaklock {

/// Monte Carlo estimate of I[Y; X_1 | X_2..X_n] in nats for Y ~ U{-1,1},
/// X_i | Y ~ N(Y, sigma^2) i.i.d. Uses the closed-form posterior
/// p(Y=1 | x_S) = sigmoid(2 * sum_S x_i / sigma^2) and the coupled
/// difference H(Y | X_2..X_n) - H(Y | X_1..X_n) on shared samples.
double cmi_oracle(double sigma, int n, long samples, uint64_t seed);

}  // namespace leaklock
