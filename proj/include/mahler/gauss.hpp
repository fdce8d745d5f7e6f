#pragma once

#include <map>
#include <mutex>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

namespace mahler {

// Gauss-Legendre rule on [-1, 1], nodes ascending.
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

inline const GaussRule& gauss_legendre(int n)
{
    static std::mutex mtx;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end())
        return it->second;

    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    // boost gives the non-negative zeros in ascending order
    auto zeros = boost::math::legendre_p_zeros<double>(n);
    const int m = static_cast<int>(zeros.size());
    const int mid = n / 2;
    for (int k = 0; k < m; ++k) {
        const double x = zeros[k];
        const double dp = boost::math::legendre_p_prime(n, x);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // odd n: zeros[0] == 0 sits at the middle
        const int up = mid + k;
        const int dn = n % 2 == 0 ? mid - 1 - k : mid - k;
        r.x[up] = x;
        r.x[dn] = -x;
        r.w[up] = r.w[dn] = w;
    }
    return cache.emplace(n, std::move(r)).first->second;
}

// Nodes and weights mapped to [a, b].
inline void gauss_nodes(int n, double a, double b, std::vector<double>& x, std::vector<double>& w)
{
    const GaussRule& r = gauss_legendre(n);
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        x[i] = c + h * r.x[i];
        w[i] = h * r.w[i];
    }
}

template <class F>
double gauss_integrate(F&& f, double a, double b, int n)
{
    const GaussRule& r = gauss_legendre(n);
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        s += r.w[i] * f(c + h * r.x[i]);
    return h * s;
}

} // namespace mahler
