#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "gauss.hpp"
#include "linalg.hpp"

namespace mahler {

inline void check_grid_size(int n_alpha, int n_beta)
{
    auto bad = [&](const char* why) {
        throw Error(ErrorKind::BadGridSize,
                    std::to_string(n_alpha) + "x" + std::to_string(n_beta) + ": " + why);
    };
    if (n_alpha < 8 || n_beta < 16)
        bad("need n_alpha >= 8 and n_beta >= 16");
    if (n_alpha > 4096 || n_beta > 4096)
        bad("sizes are capped at 4096");
    if (n_alpha % 2 != 0)
        bad("n_alpha must be even");
    if (n_beta % 4 != 0)
        bad("n_beta must be a multiple of 4");
}

// Polar angle nodes: Gauss-Legendre in t = cos(alpha) on each hemisphere,
// alpha ascending. Weights are exact for polynomials in cos(alpha).
inline void alpha_rule(int n_alpha, std::vector<double>& a, std::vector<double>& w)
{
    const int h = n_alpha / 2;
    std::vector<double> t, v;
    a.clear();
    w.clear();
    for (int half = 0; half < 2; ++half) {
        gauss_nodes(h, half == 0 ? 0.0 : -1.0, half == 0 ? 1.0 : 0.0, t, v);
        for (int i = h - 1; i >= 0; --i) {
            a.push_back(std::acos(t[i]));
            w.push_back(v[i]);
        }
    }
}

// Azimuth nodes: Gauss-Legendre on each quarter turn, so that every
// coordinate octant is integrated by its own tensor rule.
inline void beta_rule(int n_beta, std::vector<double>& b, std::vector<double>& w)
{
    const int q = n_beta / 4;
    std::vector<double> x, v;
    b.clear();
    w.clear();
    for (int k = 0; k < 4; ++k) {
        gauss_nodes(q, k * kPi / 2, (k + 1) * kPi / 2, x, v);
        b.insert(b.end(), x.begin(), x.end());
        w.insert(w.end(), v.begin(), v.end());
    }
}

} // namespace mahler
