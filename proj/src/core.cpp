// SPDX-License-Identifier: Apache-2.0
#include "watersense/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace watersense {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

void check_timestamps(const std::vector<double>& t) {
    require(t.size() >= 2, "window needs at least 2 samples");
    for (std::size_t k = 0; k < t.size(); ++k) {
        require(std::isfinite(t[k]), "timestamp is not finite");
        if (k > 0 && !(t[k] > t[k - 1])) {
            std::ostringstream os;
            os << "timestamps must be strictly increasing (index " << k << ")";
            throw std::invalid_argument(os.str());
        }
    }
}

}  // namespace

double wrap_phase(double phase) {
    double w = std::fmod(phase + kPi, kTwoPi);
    if (w < 0) w += kTwoPi;
    return w - kPi;
}

void Geometry::validate() const {
    require(bs_height_m > 0 && std::isfinite(bs_height_m), "bs_height_m must be positive");
    require(ue_height_m > 0 && std::isfinite(ue_height_m), "ue_height_m must be positive");
    require(horizontal_distance_m > 0 && std::isfinite(horizontal_distance_m),
            "horizontal_distance_m must be positive");
}

double reflection_angle(const Geometry& geometry) {
    return std::atan(geometry.horizontal_distance_m / (geometry.bs_height_m + geometry.ue_height_m));
}

void SystemConfig::validate() const {
    require(carrier_freq_hz > 0, "carrier_freq_hz must be positive");
    require(subcarrier_spacing_hz > 0, "subcarrier_spacing_hz must be positive");
    require(num_subcarriers > 0, "num_subcarriers must be positive");
    require(num_antennas > 0, "num_antennas must be positive");
    require(antenna_spacing == 1.0, "antenna_spacing is fixed to 1.0 half-wavelength");
    geometry.validate();
    require(window_duration_s > 0, "window_duration_s must be positive");
    require(session_duration_s > 0, "session_duration_s must be positive");
    require(gap_duration_s >= 0, "gap_duration_s must be nonnegative");
    require(intra_session_rate_hz > 0, "intra_session_rate_hz must be positive");
    require(window_duration_s >= session_duration_s + gap_duration_s - 1e-9,
            "window_duration_s must cover at least one session plus gap");
}

std::size_t session_count(const SystemConfig& config) {
    const double period = config.session_duration_s + config.gap_duration_s;
    return static_cast<std::size_t>(std::ceil(config.window_duration_s / period - 1e-9));
}

std::vector<double> make_sampling_schedule(const SystemConfig& config) {
    config.validate();
    const double period = config.session_duration_s + config.gap_duration_s;
    const auto per_session =
        static_cast<std::size_t>(std::floor(config.session_duration_s * config.intra_session_rate_hz + 1e-9));
    const std::size_t sessions = session_count(config);
    std::vector<double> t;
    t.reserve(sessions * per_session);
    for (std::size_t s = 0; s < sessions; ++s) {
        const double start = static_cast<double>(s) * period;
        for (std::size_t m = 0; m < per_session; ++m) {
            const double tk = start + static_cast<double>(m) / config.intra_session_rate_hz;
            if (tk >= config.window_duration_s - 1e-12) break;
            t.push_back(tk);
        }
    }
    if (t.size() < 2) throw std::invalid_argument("sampling schedule yields fewer than 2 samples");
    return t;
}

double median_interval(std::span<const double> timestamps) {
    if (timestamps.size() < 2) throw std::invalid_argument("median_interval needs 2 timestamps");
    std::vector<double> d(timestamps.size() - 1);
    for (std::size_t k = 1; k < timestamps.size(); ++k) d[k - 1] = timestamps[k] - timestamps[k - 1];
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    if (d.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(d.begin(), mid);
    return 0.5 * (lo + hi);
}

CsiWindow::CsiWindow(std::size_t num_antennas, std::size_t num_subcarriers, std::vector<double> timestamps_s,
                     std::vector<cf> samples, double carrier_freq_hz, double subcarrier_spacing_hz)
    : antennas_(num_antennas),
      subcarriers_(num_subcarriers),
      timestamps_(std::move(timestamps_s)),
      samples_(std::move(samples)),
      carrier_freq_hz_(carrier_freq_hz),
      subcarrier_spacing_hz_(subcarrier_spacing_hz) {
    require(antennas_ > 0 && subcarriers_ > 0, "CSI window needs at least one antenna and subcarrier");
    check_timestamps(timestamps_);
    require(samples_.size() == antennas_ * subcarriers_ * timestamps_.size(),
            "CSI tensor size does not match (N, M, L)");
    for (const auto& v : samples_) require(std::isfinite(v.real()) && std::isfinite(v.imag()), "CSI entry is not finite");
    require(carrier_freq_hz_ > 0 && subcarrier_spacing_hz_ > 0, "CSI window frequencies must be positive");
}

PowerWindow::PowerWindow(std::size_t num_antennas, std::size_t num_subcarriers, std::vector<double> timestamps_s,
                         std::vector<double> values)
    : antennas_(num_antennas),
      subcarriers_(num_subcarriers),
      timestamps_(std::move(timestamps_s)),
      values_(std::move(values)) {
    require(antennas_ > 0 && subcarriers_ > 0, "power window needs at least one antenna and subcarrier");
    check_timestamps(timestamps_);
    require(values_.size() == antennas_ * subcarriers_ * timestamps_.size(), "power tensor size does not match");
    for (double v : values_) require(std::isfinite(v), "power entry is not finite");
}

DopplerGrid::DopplerGrid(std::vector<double> bins_hz) : bins_(std::move(bins_hz)) {
    require(bins_.size() >= 3 && bins_.size() % 2 == 1, "Doppler grid needs an odd number (>= 3) of bins");
    const std::size_t z = bins_.size() / 2;
    require(bins_[z] == 0.0, "Doppler grid must contain exactly 0 Hz at its centre");
    const double step = bins_[1] - bins_[0];
    require(step > 0, "Doppler grid must be ascending");
    for (std::size_t g = 1; g < bins_.size(); ++g) {
        require(std::abs((bins_[g] - bins_[g - 1]) - step) <= 1e-9 * step, "Doppler grid must be uniform");
    }
    for (std::size_t g = 0; g < z; ++g) {
        require(std::abs(bins_[g] + bins_[bins_.size() - 1 - g]) <= 1e-9 * step, "Doppler grid must be symmetric");
    }
}

DopplerGrid DopplerGrid::symmetric(double max_hz, std::size_t count) {
    require(max_hz > 0, "Doppler span must be positive");
    require(count >= 3 && count % 2 == 1, "Doppler bin count must be odd and >= 3");
    const auto half = static_cast<long>(count / 2);
    const double step = max_hz / static_cast<double>(half);
    std::vector<double> bins(count);
    for (long g = -half; g <= half; ++g) bins[static_cast<std::size_t>(g + half)] = static_cast<double>(g) * step;
    return DopplerGrid(std::move(bins));
}

DelayGrid::DelayGrid(std::vector<double> bins_s) : bins_(std::move(bins_s)) {
    require(!bins_.empty(), "delay grid is empty");
    require(bins_[0] > 0, "delay bins must be strictly positive");
    if (bins_.size() > 1) {
        const double step = bins_[1] - bins_[0];
        require(step > 0, "delay grid must be ascending");
        for (std::size_t k = 1; k < bins_.size(); ++k) {
            require(std::abs((bins_[k] - bins_[k - 1]) - step) <= 1e-9 * step, "delay grid must be uniform");
        }
    }
}

DelayGrid DelayGrid::for_band(std::size_t num_subcarriers, double subcarrier_spacing_hz, std::size_t oversample) {
    require(num_subcarriers > 0 && subcarrier_spacing_hz > 0 && oversample > 0, "invalid band for delay grid");
    const double step = 1.0 / (static_cast<double>(oversample * num_subcarriers) * subcarrier_spacing_hz);
    const double max_delay = 1.0 / (2.0 * subcarrier_spacing_hz);
    const auto count = static_cast<std::size_t>(std::floor(max_delay / step + 1e-9));
    std::vector<double> bins(std::max<std::size_t>(count, 1));
    for (std::size_t k = 0; k < bins.size(); ++k) bins[k] = static_cast<double>(k + 1) * step;
    return DelayGrid(std::move(bins));
}

}  // namespace watersense
