#pragma once

#include <cmath>
#include <limits>

namespace fracheat {

/// Observed range of a compensated ratio; the numerical surrogate for a
/// two-sided bound with unknown constants.
struct Band {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    long samples = 0;

    void absorb(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ++samples;
    }

    bool valid() const { return samples > 0 && lo > 0.0 && std::isfinite(hi); }

    /// max/min width; infinite when the band is empty or touches zero.
    double ratio() const {
        if (!valid()) return std::numeric_limits<double>::infinity();
        return hi / lo;
    }
};

} // namespace fracheat
