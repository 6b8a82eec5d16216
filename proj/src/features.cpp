// SPDX-License-Identifier: Apache-2.0
#include "watersense/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace watersense {

Eigen::VectorXcd beamformer_weights(const CovarianceEstimate& cov, double delay_s, std::size_t num_subcarriers,
                                    double subcarrier_spacing_hz, BeamformerMode mode) {
    const Eigen::VectorXcd a = steering_vector(delay_s, num_subcarriers, subcarrier_spacing_hz);
    if (mode == BeamformerMode::DelayAndSum) return a / static_cast<double>(num_subcarriers);

    if (cov.degenerate) throw std::invalid_argument("MVDR weights need a nondegenerate covariance");
    if (cov.matrix.rows() != a.size()) throw std::invalid_argument("covariance size does not match M");
    const double condition = condition_number(cov);
    if (!(condition <= kMaxConditionNumber)) throw IllConditionedError(cov.doppler_bin, condition);
    const Eigen::LLT<Eigen::MatrixXcd> llt(cov.matrix);
    if (llt.info() != Eigen::Success) throw IllConditionedError(cov.doppler_bin, condition);
    const Eigen::VectorXcd r_inv_a = llt.solve(a);
    return r_inv_a / a.dot(r_inv_a);  // dot() conjugates its left operand
}

cd extract_feature(const DopplerSpectrum& spectrum, std::size_t doppler_bin, const Eigen::VectorXcd& weights,
                   std::size_t antenna) {
    const std::size_t m = spectrum.num_subcarriers();
    if (static_cast<std::size_t>(weights.size()) != m) throw std::invalid_argument("weight length does not match M");
    if (antenna >= spectrum.num_antennas()) throw std::out_of_range("antenna index out of range");
    if (doppler_bin >= spectrum.grid().size()) throw std::out_of_range("Doppler bin out of range");
    cd y{0.0, 0.0};
    for (std::size_t j = 0; j < m; ++j) {
        y += std::conj(weights(static_cast<Eigen::Index>(j))) * spectrum.at(antenna, j, doppler_bin);
    }
    return std::conj(y);
}

cd reference_to_band_center(cd feature, double delay_s, std::size_t num_subcarriers, double subcarrier_spacing_hz) {
    const double shift = kPi * static_cast<double>(num_subcarriers - 1) * subcarrier_spacing_hz * delay_s;
    return feature * std::polar(1.0, shift);
}

SpatialResult spatial_refine(std::span<const cd> features, std::size_t fft_size) {
    const std::size_t n = features.size();
    if (n < 2) throw std::invalid_argument("spatial refinement needs N >= 2; single-antenna streams skip it");
    if (fft_size < n) throw std::invalid_argument("spatial FFT size must be at least N");
    SpatialResult best{};
    double best_mag = -1.0;
    for (std::size_t k = 0; k < fft_size; ++k) {
        cd z{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            z += features[i] * std::polar(1.0, -kTwoPi * static_cast<double>(k * i % fft_size) / static_cast<double>(fft_size));
        }
        z /= static_cast<double>(n);
        if (std::abs(z) > best_mag) {
            best_mag = std::abs(z);
            best.value = z;
            best.bin = k;
        }
    }
    const double k_signed = best.bin < (fft_size + 1) / 2 ? static_cast<double>(best.bin)
                                                          : static_cast<double>(best.bin) - static_cast<double>(fft_size);
    const double s = std::clamp(-2.0 * k_signed / static_cast<double>(fft_size), -1.0, 1.0);
    best.aoa_deg = rad2deg(std::asin(s));
    return best;
}

namespace {

std::size_t lower_median(std::vector<std::size_t> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

std::size_t distance(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

Cell median_cell(std::span<const Cell> history) {
    std::vector<std::size_t> doppler;
    std::vector<std::size_t> delay;
    for (const auto& c : history) {
        doppler.push_back(c.doppler_bin);
        delay.push_back(c.delay_bin);
    }
    return {lower_median(std::move(doppler)), lower_median(std::move(delay))};
}

}  // namespace

StabilizedCell stabilize_bins(std::span<const Cell> history, Cell candidate, std::size_t gate) {
    if (history.empty()) return {candidate, false};
    const Cell median = median_cell(history);
    if (distance(candidate.doppler_bin, median.doppler_bin) <= gate &&
        distance(candidate.delay_bin, median.delay_bin) <= gate) {
        return {candidate, false};
    }
    return {median, true};
}

BinStabilizer::BinStabilizer(std::size_t depth, std::size_t gate) : depth_(depth), gate_(gate) {
    if (depth_ == 0) throw std::invalid_argument("stabilizer depth must be positive");
}

StabilizedCell BinStabilizer::update(Cell candidate) {
    const std::vector<Cell> snapshot(history_.begin(), history_.end());
    const StabilizedCell out = stabilize_bins(snapshot, candidate, gate_);
    history_.push_back(candidate);
    if (history_.size() > depth_) history_.pop_front();
    return out;
}

std::optional<Cell> BinStabilizer::coast() const {
    if (history_.empty()) return std::nullopt;
    const std::vector<Cell> snapshot(history_.begin(), history_.end());
    return median_cell(snapshot);
}

}  // namespace watersense
