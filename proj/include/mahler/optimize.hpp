#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "errors.hpp"

namespace mahler {

struct MinimizeResult {
    std::vector<double> x;
    double f;
    int iterations;
};

// Nelder-Mead with standard coefficients. Stops when the simplex spread in
// both x and f drops below tol; throws NoConvergence after max_iter steps.
inline MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                  std::vector<double> x0, double step, double tol = 1e-8,
                                  int max_iter = 10000)
{
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> s(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i)
        s[i + 1][i] += step;
    std::vector<double> fs(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        fs[i] = f(s[i]);

    std::vector<std::size_t> idx(n + 1);
    for (int it = 0; it < max_iter; ++it) {
        for (std::size_t i = 0; i <= n; ++i)
            idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        const std::size_t best = idx.front(), worst = idx.back(), second = idx[n - 1];

        double xspread = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                xspread = std::max(xspread, std::abs(s[i][k] - s[best][k]));
        const double fspread = std::abs(fs[worst] - fs[best]);
        if (xspread < tol && fspread <= tol * std::max(1.0, std::abs(fs[best])))
            return {s[best], fs[best], it};

        std::vector<double> c(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst)
                for (std::size_t k = 0; k < n; ++k)
                    c[k] += s[i][k] / static_cast<double>(n);
        auto along = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t k = 0; k < n; ++k)
                p[k] = c[k] + t * (s[worst][k] - c[k]);
            return p;
        };

        auto xr = along(-1.0);
        const double fr = f(xr);
        if (fr < fs[best]) {
            auto xe = along(-2.0);
            const double fe = f(xe);
            if (fe < fr) {
                s[worst] = xe;
                fs[worst] = fe;
            } else {
                s[worst] = xr;
                fs[worst] = fr;
            }
            continue;
        }
        if (fr < fs[second]) {
            s[worst] = xr;
            fs[worst] = fr;
            continue;
        }
        const bool outside = fr < fs[worst];
        auto xc = along(outside ? -0.5 : 0.5);
        const double fc = f(xc);
        if (fc < (outside ? fr : fs[worst])) {
            s[worst] = xc;
            fs[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best)
                continue;
            for (std::size_t k = 0; k < n; ++k)
                s[i][k] = s[best][k] + 0.5 * (s[i][k] - s[best][k]);
            fs[i] = f(s[i]);
        }
    }
    throw Error(ErrorKind::NoConvergence, "Nelder-Mead exceeded the iteration budget");
}

} // namespace mahler
