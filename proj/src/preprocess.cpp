// SPDX-License-Identifier: Apache-2.0
#include "watersense/preprocess.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "watersense/nufft.hpp"

namespace watersense {

DopplerSpectrum::DopplerSpectrum(std::size_t num_antennas, std::size_t num_subcarriers, DopplerGrid grid,
                                 std::vector<cd> values, double reference_time_s)
    : antennas_(num_antennas),
      subcarriers_(num_subcarriers),
      grid_(std::move(grid)),
      values_(std::move(values)),
      reference_time_s_(reference_time_s) {
    if (values_.size() != antennas_ * subcarriers_ * grid_.size()) {
        throw std::invalid_argument("Doppler spectrum size does not match (N, M, G)");
    }
}

std::vector<cd> DopplerSpectrum::slice(std::size_t g) const {
    std::vector<cd> out(antennas_ * subcarriers_);
    for (std::size_t i = 0; i < antennas_; ++i) {
        for (std::size_t j = 0; j < subcarriers_; ++j) out[i * subcarriers_ + j] = at(i, j, g);
    }
    return out;
}

PowerWindow csi_power(const CsiWindow& window) {
    const auto& in = window.samples();
    std::vector<double> p(in.size());
    for (std::size_t n = 0; n < in.size(); ++n) p[n] = std::norm(cd(in[n]));
    return PowerWindow(window.num_antennas(), window.num_subcarriers(), window.timestamps(), std::move(p));
}

PowerWindow remove_mean(const PowerWindow& power) {
    std::vector<double> out = power.values();
    const std::size_t len = power.num_samples();
    for (std::size_t s = 0; s < out.size(); s += len) {
        const auto first = out.begin() + static_cast<std::ptrdiff_t>(s);
        const double mean = std::accumulate(first, first + static_cast<std::ptrdiff_t>(len), 0.0) / static_cast<double>(len);
        for (std::size_t k = 0; k < len; ++k) out[s + k] -= mean;
    }
    return PowerWindow(power.num_antennas(), power.num_subcarriers(), power.timestamps(), std::move(out));
}

std::vector<double> window_weights(std::span<const double> timestamps, WindowFunction fn) {
    if (timestamps.size() < 2) throw std::invalid_argument("window weights need at least 2 timestamps");
    std::vector<double> w(timestamps.size(), 1.0);
    if (fn == WindowFunction::Rect) return w;
    const double t0 = timestamps.front();
    const double span = timestamps.back() - t0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double u = (timestamps[k] - t0) / span;
        w[k] = 0.54 - 0.46 * std::cos(kTwoPi * u);
    }
    return w;
}

double nyquist_bound_hz(std::span<const double> timestamps) { return 0.5 / median_interval(timestamps); }

double reference_time(std::span<const double> timestamps, std::span<const double> weights, TimeReference ref) {
    if (ref == TimeReference::WindowStart) return timestamps.front();
    double sw = 0.0;
    double swt = 0.0;
    for (std::size_t k = 0; k < timestamps.size(); ++k) {
        sw += weights[k];
        swt += weights[k] * timestamps[k];
    }
    return swt / sw;
}

namespace {

void check_grid(const PowerWindow& power, const DopplerGrid& grid) {
    const double bound = nyquist_bound_hz(power.timestamps());
    if (grid.max_abs() > bound * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "Doppler grid reaches " << grid.max_abs() << " Hz, above the schedule's Nyquist bound of " << bound
           << " Hz";
        throw std::invalid_argument(os.str());
    }
}

std::vector<cd> direct_transform(const PowerWindow& power, const DopplerGrid& grid, std::span<const double> w,
                                 double t_ref) {
    const auto& t = power.timestamps();
    const auto len = static_cast<Eigen::Index>(t.size());
    const auto modes = static_cast<Eigen::Index>(grid.size());
    const auto series = static_cast<Eigen::Index>(power.num_antennas() * power.num_subcarriers());

    // Twiddle matrix T(k, g) = w_k exp(-j 2 pi f_g (t_k - t_ref)); one GEMM covers every series.
    Eigen::MatrixXcd twiddle(len, modes);
    for (Eigen::Index g = 0; g < modes; ++g) {
        const double f = grid.bins()[static_cast<std::size_t>(g)];
        for (Eigen::Index k = 0; k < len; ++k) {
            const double phase = kPropagationSign * kTwoPi * f * (t[static_cast<std::size_t>(k)] - t_ref);
            twiddle(k, g) = std::polar(w[static_cast<std::size_t>(k)], phase);
        }
    }
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> p(
        power.values().data(), series, len);
    const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x = p.cast<cd>() * twiddle;
    return std::vector<cd>(x.data(), x.data() + x.size());
}

std::vector<cd> nufft_transform(const PowerWindow& power, const DopplerGrid& grid, std::span<const double> w,
                                double t_ref) {
    const auto& t = power.timestamps();
    NufftPlan plan(t, t_ref, grid.spacing(), grid.size() / 2);
    const std::size_t len = t.size();
    const std::size_t series = power.num_antennas() * power.num_subcarriers();
    std::vector<cd> out(series * grid.size());
    std::vector<cd> coeffs(len);
    for (std::size_t s = 0; s < series; ++s) {
        const double* p = power.values().data() + s * len;
        for (std::size_t k = 0; k < len; ++k) coeffs[k] = cd(w[k] * p[k], 0.0);
        plan.execute(coeffs, std::span<cd>(out.data() + s * grid.size(), grid.size()));
    }
    return out;
}

}  // namespace

DopplerSpectrum doppler_transform(const PowerWindow& power, const DopplerGrid& grid, const DopplerOptions& options) {
    check_grid(power, grid);
    const auto& t = power.timestamps();
    const std::vector<double> w = window_weights(t, options.window);
    const double t_ref = reference_time(t, w, options.reference);
    std::vector<cd> values = options.method == TransformMethod::Direct ? direct_transform(power, grid, w, t_ref)
                                                                       : nufft_transform(power, grid, w, t_ref);
    const double gain = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : values) v /= gain;
    return DopplerSpectrum(power.num_antennas(), power.num_subcarriers(), grid, std::move(values), t_ref);
}

}  // namespace watersense
