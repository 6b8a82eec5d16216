// SPDX-License-Identifier: Apache-2.0
#include "watersense/nufft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "watersense/core.hpp"

namespace watersense {

namespace {

// FFTW planning mutates global state; execution with a private plan does not.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

struct NufftPlan::Fftw {
    fftw_complex* buffer = nullptr;
    fftw_plan plan = nullptr;

    explicit Fftw(std::size_t n) {
        std::lock_guard lock(planner_mutex());
        buffer = fftw_alloc_complex(n);
        if (!buffer) throw std::bad_alloc();
        plan = fftw_plan_dft_1d(static_cast<int>(n), buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
        if (!plan) {
            fftw_free(buffer);
            throw std::runtime_error("FFTW could not build a plan");
        }
    }
    ~Fftw() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
        fftw_free(buffer);
    }
};

NufftPlan::NufftPlan(std::span<const double> times_s, double t_ref_s, double mode_spacing_hz, std::size_t half_modes,
                     std::size_t spread_width)
    : half_(half_modes), width_(spread_width) {
    if (half_ == 0) throw std::invalid_argument("NUFFT needs at least one nonzero mode");
    if (width_ < 2) throw std::invalid_argument("NUFFT spread width must be >= 2");
    if (!(mode_spacing_hz > 0)) throw std::invalid_argument("NUFFT mode spacing must be positive");

    constexpr double kOversample = 2.0;
    const std::size_t modes = num_modes();
    grid_ = static_cast<std::size_t>(kOversample) * modes;
    if (grid_ < 2 * width_ + 1) grid_ = 2 * width_ + 1;
    tau_ = kPi * static_cast<double>(width_) /
           (static_cast<double>(modes) * static_cast<double>(modes) * kOversample * (kOversample - 0.5));

    const double h = kTwoPi / static_cast<double>(grid_);
    const auto span = static_cast<long>(width_);
    base_.resize(times_s.size());
    weights_.resize(times_s.size() * 2 * width_);
    for (std::size_t k = 0; k < times_s.size(); ++k) {
        double x = std::fmod(kTwoPi * mode_spacing_hz * (times_s[k] - t_ref_s), kTwoPi);
        if (x < 0) x += kTwoPi;
        const auto nearest = static_cast<long>(std::floor(x / h));
        base_[k] = nearest - span + 1;
        for (std::size_t s = 0; s < 2 * width_; ++s) {
            const double d = x - h * static_cast<double>(base_[k] + static_cast<long>(s));
            weights_[k * 2 * width_ + s] = std::exp(-d * d / (4.0 * tau_));
        }
    }

    deconv_.resize(modes);
    const double scale = std::sqrt(kPi / tau_) / static_cast<double>(grid_);
    for (std::size_t m = 0; m < modes; ++m) {
        const double q = static_cast<double>(m) - static_cast<double>(half_);
        deconv_[m] = scale * std::exp(q * q * tau_);
    }
    fftw_ = std::make_unique<Fftw>(grid_);
}

NufftPlan::~NufftPlan() = default;

void NufftPlan::execute(std::span<const std::complex<double>> coeffs, std::span<std::complex<double>> out) {
    if (coeffs.size() != num_points()) throw std::invalid_argument("NUFFT input length does not match the plan");
    if (out.size() != num_modes()) throw std::invalid_argument("NUFFT output length does not match the plan");

    auto* buf = reinterpret_cast<std::complex<double>*>(fftw_->buffer);
    std::fill(buf, buf + grid_, std::complex<double>{});
    const auto g = static_cast<long>(grid_);
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        const double* w = &weights_[k * 2 * width_];
        long idx = base_[k] % g;
        if (idx < 0) idx += g;
        for (std::size_t s = 0; s < 2 * width_; ++s) {
            buf[idx] += w[s] * coeffs[k];
            if (++idx == g) idx = 0;
        }
    }
    fftw_execute(fftw_->plan);
    for (std::size_t m = 0; m < out.size(); ++m) {
        long q = static_cast<long>(m) - static_cast<long>(half_);
        if (q < 0) q += g;
        out[m] = deconv_[m] * buf[q];
    }
}

}  // namespace watersense
