#pragma once

// Test-only integration oracle: composite Simpson on a fixed fine grid.
// Integrands here are smooth with sub-Gaussian tails, so [-12, 12] with a
// few thousand panels is far below the 1e-8 budget the checks use.

#include <cmath>
#include <functional>

namespace condmom::testsupport {

inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    const double h = (b - a) / (2.0 * panels);
    double sum = f(a) + f(b);
    for (int i = 1; i < 2 * panels; ++i)
        sum += f(a + h * i) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

inline double integrate_real_line(const std::function<double(double)>& f) {
    return simpson(f, -12.0, 12.0, 6000);
}

// standard normal density, used as the closed-form side of moment checks
inline double std_normal_pdf(double v) {
    return std::exp(-0.5 * v * v) / std::sqrt(2.0 * 3.14159265358979323846);
}

} // namespace condmom::testsupport
