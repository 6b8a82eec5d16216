// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "watersense/core.hpp"

namespace watersense {

enum class WindowFunction { Hamming, Rect };

/// Time origin of the Doppler phase. WindowStart uses the first timestamp.
/// WeightedCenter uses sum(w t) / sum(w): the spectrum phase then refers to the
/// window's centroid, so a small mismatch between the true Doppler and the chosen
/// bin adds almost no phase.
enum class TimeReference { WindowStart, WeightedCenter };

enum class TransformMethod { Direct, Nufft };

struct DopplerOptions {
    WindowFunction window = WindowFunction::Hamming;
    TimeReference reference = TimeReference::WindowStart;
    TransformMethod method = TransformMethod::Direct;
};

/// X[i][j][g] over a DopplerGrid, normalised by the window's coherent gain.
class DopplerSpectrum {
public:
    DopplerSpectrum(std::size_t num_antennas, std::size_t num_subcarriers, DopplerGrid grid,
                    std::vector<cd> values, double reference_time_s);

    std::size_t num_antennas() const { return antennas_; }
    std::size_t num_subcarriers() const { return subcarriers_; }
    const DopplerGrid& grid() const { return grid_; }
    const std::vector<cd>& values() const { return values_; }
    double reference_time_s() const { return reference_time_s_; }

    cd at(std::size_t i, std::size_t j, std::size_t g) const { return values_[(i * subcarriers_ + j) * grid_.size() + g]; }
    std::span<const cd> series(std::size_t i, std::size_t j) const {
        return {values_.data() + (i * subcarriers_ + j) * grid_.size(), grid_.size()};
    }
    /// M x N observation matrix for Doppler bin g, column-major (subcarrier fastest).
    std::vector<cd> slice(std::size_t g) const;

private:
    std::size_t antennas_;
    std::size_t subcarriers_;
    DopplerGrid grid_;
    std::vector<cd> values_;
    double reference_time_s_;
};

/// |CSI|^2 per entry. Unit-modulus phase factors (TO/CFO, hardware phase) cancel.
PowerWindow csi_power(const CsiWindow& window);

/// Subtracts each (antenna, subcarrier) series' temporal mean.
PowerWindow remove_mean(const PowerWindow& power);

/// Window shape evaluated at u = (t - t_first) / (t_last - t_first).
std::vector<double> window_weights(std::span<const double> timestamps, WindowFunction fn);

/// Highest Doppler frequency the schedule supports: 1 / (2 * median sample interval).
double nyquist_bound_hz(std::span<const double> timestamps);

/// Reference time for the chosen convention, in the window's own time base.
double reference_time(std::span<const double> timestamps, std::span<const double> weights, TimeReference ref);

/// X_{i,j}(f) = sum_k w_k P_{i,j,k} exp(-j 2 pi f (t_k - t_ref)) / sum_k w_k.
/// Throws std::invalid_argument when the grid reaches above the Nyquist bound.
DopplerSpectrum doppler_transform(const PowerWindow& power, const DopplerGrid& grid, const DopplerOptions& options = {});

}  // namespace watersense
