#pragma once

#include "hmflow/types.hpp"

#include <cmath>
#include <random>

namespace hmflow::testing {

inline Vec random_unit(std::mt19937_64& gen, int dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = n(gen);
    return v / v.norm();
}

inline Vec random_tangent(std::mt19937_64& gen, const Vec& p) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec v(p.size());
    for (int i = 0; i < p.size(); ++i) v(i) = n(gen);
    return v - v.dot(p) * p;
}

inline Vec vec(std::initializer_list<double> values) {
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

}  // namespace hmflow::testing
