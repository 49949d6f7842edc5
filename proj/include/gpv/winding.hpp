#pragma once

#include <cmath>
#include <numbers>

#include "gpv/grid.hpp"

namespace gpv {

// Sum of principal-value phase increments around a -> b -> c -> d -> a,
// divided by 2 pi. An integer for any non-degenerate corner values.
inline double plaquette_circulation(cplx a, cplx b, cplx c, cplx d) {
    const double s = std::arg(b * std::conj(a)) + std::arg(c * std::conj(b)) +
                     std::arg(d * std::conj(c)) + std::arg(a * std::conj(d));
    return s / (2.0 * std::numbers::pi);
}

}  // namespace gpv
