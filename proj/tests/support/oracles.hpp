// Test-only reference implementations. Deliberately naive: plain loops, no Eigen,
// no FFTW, nothing shared with the library code they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
inline constexpr double kPi = 3.14159265358979323846;

/// X[q] = sum_k x[k] exp(-j 2 pi q k / n), q = 0..n-1.
inline std::vector<cd> textbook_dft(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<cd> out(n);
    for (std::size_t q = 0; q < n; ++q) {
        cd acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double a = -2.0 * kPi * static_cast<double>(q * k % n) / static_cast<double>(n);
            acc += x[k] * cd(std::cos(a), std::sin(a));
        }
        out[q] = acc;
    }
    return out;
}

/// Windowed non-uniform sum at one frequency, normalised by sum(w).
inline cd nonuniform_sum(std::span<const double> t, std::span<const double> p, std::span<const double> w, double f,
                         double t_ref) {
    cd acc = 0.0;
    double gain = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double a = -2.0 * kPi * f * (t[k] - t_ref);
        acc += w[k] * p[k] * cd(std::cos(a), std::sin(a));
        gain += w[k];
    }
    return acc / gain;
}

/// Classic unwrap: each sample moves to the 2 pi branch nearest the previous output.
inline std::vector<double> nearest_multiple_unwrap(std::span<const double> wrapped) {
    std::vector<double> out(wrapped.begin(), wrapped.end());
    for (std::size_t k = 1; k < out.size(); ++k) {
        const double turns = std::round((out[k - 1] - wrapped[k]) / (2.0 * kPi));
        out[k] = wrapped[k] + 2.0 * kPi * turns;
    }
    return out;
}

inline double wrap(double phase) { return std::remainder(phase, 2.0 * kPi); }

using Matrix = std::vector<std::vector<cd>>;

/// Gauss-Jordan inverse with partial pivoting.
inline Matrix invert(Matrix a) {
    const std::size_t n = a.size();
    Matrix inv(n, std::vector<cd>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
        }
        if (std::abs(a[pivot][c]) == 0.0) throw std::runtime_error("singular matrix");
        std::swap(a[c], a[pivot]);
        std::swap(inv[c], inv[pivot]);
        const cd d = a[c][c];
        for (std::size_t k = 0; k < n; ++k) {
            a[c][k] /= d;
            inv[c][k] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const cd f = a[r][c];
            if (f == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) {
                a[r][k] -= f * a[c][k];
                inv[r][k] -= f * inv[c][k];
            }
        }
    }
    return inv;
}

inline std::vector<cd> steering(double delay, std::size_t m, double df) {
    std::vector<cd> a(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double ang = -2.0 * kPi * df * static_cast<double>(j) * delay;
        a[j] = cd(std::cos(ang), std::sin(ang));
    }
    return a;
}

/// 1 / |a^H R^-1 a| evaluated delay by delay with an explicit inverse.
inline std::vector<double> brute_mvdr(const Matrix& r, std::span<const double> delays, double df) {
    const Matrix inv = invert(r);
    const std::size_t m = r.size();
    std::vector<double> out;
    for (const double tau : delays) {
        const auto a = steering(tau, m, df);
        cd q = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) q += std::conj(a[i]) * inv[i][j] * a[j];
        }
        out.push_back(1.0 / std::abs(q));
    }
    return out;
}

inline std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (v[k] > v[best]) best = k;
    }
    return best;
}

/// Sign changes of a real sequence, ignoring exact zeros.
inline std::size_t zero_crossings(std::span<const double> v) {
    std::size_t count = 0;
    int last = 0;
    for (const double x : v) {
        const int s = x > 0 ? 1 : (x < 0 ? -1 : 0);
        if (s != 0 && last != 0 && s != last) ++count;
        if (s != 0) last = s;
    }
    return count;
}

/// Median pair with the lower median for even sizes.
inline std::pair<std::size_t, std::size_t> median_pair(std::vector<std::size_t> a, std::vector<std::size_t> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {a[(a.size() - 1) / 2], b[(b.size() - 1) / 2]};
}

}  // namespace oracle
