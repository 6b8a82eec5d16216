// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace watersense {

/// Type-1 non-uniform FFT with Gaussian gridding (Greengard and Lee, 2004).
///
/// For sample phases x_k = 2 pi * df * (t_k - t_ref) and integer modes q in [-half, half],
/// evaluates F(q) = sum_k c_k exp(-j q x_k). Modes outside a 2x oversampled grid cannot alias,
/// so accuracy is set by the spreading width alone (about 1e-12 at width 12).
///
/// The spreading weights depend only on the timestamps, so one plan serves every
/// (antenna, subcarrier) series of a window. A plan is not safe for concurrent execute().
class NufftPlan {
public:
    NufftPlan(std::span<const double> times_s, double t_ref_s, double mode_spacing_hz, std::size_t half_modes,
              std::size_t spread_width = 12);
    ~NufftPlan();
    NufftPlan(const NufftPlan&) = delete;
    NufftPlan& operator=(const NufftPlan&) = delete;

    std::size_t num_modes() const { return 2 * half_ + 1; }
    std::size_t num_points() const { return base_.size(); }

    /// Output ordered from mode -half to +half.
    void execute(std::span<const std::complex<double>> coeffs, std::span<std::complex<double>> out);

private:
    struct Fftw;

    std::size_t half_;
    std::size_t width_;
    std::size_t grid_;
    double tau_;
    std::vector<long> base_;          // first grid index touched by each point
    std::vector<double> weights_;     // 2 * width_ Gaussian weights per point
    std::vector<double> deconv_;      // sqrt(pi/tau) exp(q^2 tau) / grid per output mode
    std::unique_ptr<Fftw> fftw_;
};

}  // namespace watersense
