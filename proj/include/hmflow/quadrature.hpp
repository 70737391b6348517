#pragma once

#include <cstddef>
#include <vector>

namespace hmflow {

/// Nodes and weights for E[f(Z)], Z ~ N(0, 1): probabilists' Gauss-Hermite rule.
struct GaussianRule {
    std::vector<double> nodes;
    std::vector<double> weights;  ///< sum to 1
};

GaussianRule gauss_hermite(std::size_t order);

}  // namespace hmflow
