#pragma once

#include <cmath>
#include <random>

#include "normsolve/grid.hpp"

namespace testing_support {

/// Smooth random radial field vanishing at r = R: sum of a few damped cosine modes.
inline normsolve::Field random_field(const normsolve::GridPtr& g, std::mt19937_64& rng,
                                     int modes = 4) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> c(modes);
    for (double& v : c) v = normal(rng);
    c[0] = std::abs(c[0]) + 1.0;
    const double R = g->radius();
    return normsolve::make_field(g, [&](double r) {
        double s = 0.0;
        for (int k = 0; k < modes; ++k) {
            s += c[k] * std::cos((k + 0.5) * M_PI * r / R) / (1.0 + k);
        }
        return s;
    });
}

}  // namespace testing_support
