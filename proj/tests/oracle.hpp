#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's math: complex arithmetic is done by hand on (re, im) pairs and
// the network is evaluated with plain nested loops.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

namespace oracle {

struct C {
    double re = 0.0, im = 0.0;
};

inline C mul(C a, C b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }

inline C div(C a, C b) {
    const double d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}

inline double mag(C a) { return std::sqrt(a.re * a.re + a.im * a.im); }

inline C hp(double f, double f2) {
    const double u = f / f2;
    return div({0.0, u}, {1.0, u});
}

inline C lp2(double f, double f0, double xi) {
    const double u = f / f0;
    return div({1.0, 0.0}, {1.0 - u * u, 2.0 * xi * u});
}

inline C mic(double f2, double f3, double f4, double xi3, double xi4, double f) {
    return mul(mul(hp(f, f2), lp2(f, f3, xi3)), lp2(f, f4, xi4));
}

/// Continuous phase by tracking arg(H) along a fine sweep from a frequency low
/// enough that the high-pass dominates (phase close to pi/2) and unwrapping.
inline double unwrapped_phase(double f2, double f3, double f4, double xi3, double xi4, double f) {
    const int steps = 20000;
    const double f_start = std::min(f, f2) * 1e-3;
    double prev = std::atan2(mic(f2, f3, f4, xi3, xi4, f_start).im,
                             mic(f2, f3, f4, xi3, xi4, f_start).re);
    double total = prev;
    for (int i = 1; i <= steps; ++i) {
        const double fi = f_start + (f - f_start) * i / steps;
        const C h = mic(f2, f3, f4, xi3, xi4, fi);
        const double a = std::atan2(h.im, h.re);
        double d = a - prev;
        while (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
        while (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
        total += d;
        prev = a;
    }
    return total;
}

/// Plain-loop network: w[l] is fan_out x fan_in row-major.
struct Net {
    std::vector<std::size_t> dims;
    std::vector<std::vector<double>> w, b;
};

inline std::vector<double> logits(const Net& n, const double* x) {
    std::vector<double> a(x, x + n.dims[0]);
    for (std::size_t l = 0; l < 3; ++l) {
        std::vector<double> z(n.dims[l + 1]);
        for (std::size_t o = 0; o < z.size(); ++o) {
            double s = n.b[l][o];
            for (std::size_t i = 0; i < a.size(); ++i) s += n.w[l][o * a.size() + i] * a[i];
            z[o] = l < 2 ? std::tanh(s) : s;
        }
        a = std::move(z);
    }
    return a;
}

inline double loss(const std::vector<double>& z, std::size_t label) {
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s) - z[label];
}

inline double mean_loss(const Net& n, const std::vector<double>& x,
                        const std::vector<std::uint8_t>& y) {
    double s = 0.0;
    for (std::size_t r = 0; r < y.size(); ++r) s += loss(logits(n, &x[r * n.dims[0]]), y[r]);
    return s / static_cast<double>(y.size());
}

/// Central-difference gradient of mean_loss w.r.t. every parameter, ordered
/// layer by layer, weights before biases.
inline std::vector<double> numeric_gradient(Net n, const std::vector<double>& x,
                                            const std::vector<std::uint8_t>& y, double h) {
    std::vector<double> g;
    for (std::size_t l = 0; l < 3; ++l) {
        for (auto* vec : {&n.w[l], &n.b[l]}) {
            for (double& p : *vec) {
                const double keep = p;
                p = keep + h;
                const double up = mean_loss(n, x, y);
                p = keep - h;
                const double down = mean_loss(n, x, y);
                p = keep;
                g.push_back((up - down) / (2.0 * h));
            }
        }
    }
    return g;
}

}  // namespace oracle
