// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "watersense/detect.hpp"
#include "watersense/heatmap.hpp"
#include "watersense/preprocess.hpp"

namespace watersense {

enum class BeamformerMode { Mvdr, DelayAndSum };

/// Mvdr: R^-1 a / (a^H R^-1 a). DelayAndSum: a / M. Both satisfy w^H a = 1.
/// Mvdr throws IllConditionedError for a badly conditioned covariance.
Eigen::VectorXcd beamformer_weights(const CovarianceEstimate& cov, double delay_s, std::size_t num_subcarriers,
                                    double subcarrier_spacing_hz, BeamformerMode mode);

/// Combines subcarriers of antenna i at Doppler bin g: Y_i = conj(w^H x).
///
/// The positive-Doppler term of CSI power across subcarriers is rho exp(-j 2 pi f_j dtau),
/// so w^H x carries phase -2 pi f dtau. Conjugating returns the path phase +2 pi f dtau,
/// which decreases as the water rises and the reflected path shortens.
cd extract_feature(const DopplerSpectrum& spectrum, std::size_t doppler_bin, const Eigen::VectorXcd& weights,
                   std::size_t antenna);

/// Moves the phase reference of a feature steered at delay_s from the first subcarrier to the
/// band centre. A feature at true delay dtau then reads 2 pi f_centre dtau whatever delay bin
/// was steered, so a one-bin change between windows does not step the phase.
cd reference_to_band_center(cd feature, double delay_s, std::size_t num_subcarriers, double subcarrier_spacing_hz);

struct SpatialResult {
    cd value;
    double aoa_deg = 0.0;  // relative angle label, sin(theta) = -2 k / K
    std::size_t bin = 0;   // FFT bin index in [0, K)
};

inline constexpr std::size_t kSpatialFftSize = 64;

/// Zero-padded FFT over antennas, Z_k = (1/N) sum_i Y_i exp(-j 2 pi k i / K); returns the
/// largest |Z_k|. Throws std::invalid_argument for a single antenna.
SpatialResult spatial_refine(std::span<const cd> features, std::size_t fft_size = kSpatialFftSize);

struct StabilizedCell {
    Cell cell;
    bool coasting = false;
};

/// Median gate over recent (Doppler, delay) bins. Lower median for even history sizes.
StabilizedCell stabilize_bins(std::span<const Cell> history, Cell candidate, std::size_t gate = 2);

/// Owns the recent-bin history of one tracked stream.
class BinStabilizer {
public:
    explicit BinStabilizer(std::size_t depth = 5, std::size_t gate = 2);

    /// Gates the candidate against the current history, then records it.
    StabilizedCell update(Cell candidate);
    /// No detection this window: holds the median if there is any history.
    std::optional<Cell> coast() const;

    std::size_t depth() const { return depth_; }
    std::size_t gate() const { return gate_; }

private:
    std::size_t depth_;
    std::size_t gate_;
    std::deque<Cell> history_;
};

}  // namespace watersense
