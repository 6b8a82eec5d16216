// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace watersense {

using cd = std::complex<double>;
using cf = std::complex<float>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kSpeedOfLight = 299'792'458.0;

// Every propagation term in the toolkit is written exp(kPropagationSign * j * phase),
// e.g. a delay tau on subcarrier frequency f contributes exp(-j 2 pi f tau).
inline constexpr double kPropagationSign = -1.0;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Wraps into [-pi, pi).
double wrap_phase(double phase);

/// Transmitter/receiver placement relative to the water surface.
struct Geometry {
    double bs_height_m = 1.0;
    double ue_height_m = 1.0;
    double horizontal_distance_m = 2.0;

    void validate() const;
};

/// Specular reflection angle off the water surface, measured from the vertical.
/// Returns atan(d / (h_bs + h_ue)) in radians, always inside (0, pi/2).
double reflection_angle(const Geometry& geometry);

/// Parameters shared by every pipeline stage.
///
/// Subcarrier j (0-based) sits at carrier_freq_hz + j * subcarrier_spacing_hz, so
/// carrier_freq_hz is the frequency of the first subcarrier. The antenna array is
/// a half-wavelength ULA; antenna_spacing is kept only so config files can state it.
struct SystemConfig {
    double carrier_freq_hz = 28e9;
    double subcarrier_spacing_hz = 70e6 / 46.0;
    std::size_t num_subcarriers = 46;
    std::size_t num_antennas = 1;
    double antenna_spacing = 1.0;  // half-wavelengths
    Geometry geometry{};
    double window_duration_s = 300.0;
    double session_duration_s = 2.0;
    double gap_duration_s = 20.0;
    double intra_session_rate_hz = 100.0;

    void validate() const;

    double wavelength() const { return kSpeedOfLight / carrier_freq_hz; }
    double subcarrier_freq(std::size_t j) const {
        return carrier_freq_hz + static_cast<double>(j) * subcarrier_spacing_hz;
    }
    double band_center_freq() const {
        return subcarrier_freq(0) + 0.5 * static_cast<double>(num_subcarriers - 1) * subcarrier_spacing_hz;
    }
    double band_center_wavelength() const { return kSpeedOfLight / band_center_freq(); }
    double bandwidth_hz() const { return static_cast<double>(num_subcarriers) * subcarrier_spacing_hz; }
};

/// Relative timestamps for one window: sessions of session_duration_s sampled at
/// intra_session_rate_hz, each followed by gap_duration_s, truncated at the window end.
std::vector<double> make_sampling_schedule(const SystemConfig& config);

/// Number of sessions that start inside the window.
std::size_t session_count(const SystemConfig& config);

double median_interval(std::span<const double> timestamps);

// Storage is 0-based everywhere: antenna i, subcarrier j and time index k of the
// 1-based channel model map to indices i-1, j-1, k-1.

/// Complex CSI tensor [antenna][subcarrier][time]. Timestamps are seconds on any
/// monotone time base; processing refers everything to the window's own timestamps.
class CsiWindow {
public:
    CsiWindow(std::size_t num_antennas, std::size_t num_subcarriers, std::vector<double> timestamps_s,
              std::vector<cf> samples, double carrier_freq_hz, double subcarrier_spacing_hz);

    std::size_t num_antennas() const { return antennas_; }
    std::size_t num_subcarriers() const { return subcarriers_; }
    std::size_t num_samples() const { return timestamps_.size(); }
    double carrier_freq_hz() const { return carrier_freq_hz_; }
    double subcarrier_spacing_hz() const { return subcarrier_spacing_hz_; }

    const std::vector<double>& timestamps() const { return timestamps_; }
    const std::vector<cf>& samples() const { return samples_; }

    cf at(std::size_t i, std::size_t j, std::size_t k) const { return samples_[offset(i, j) + k]; }
    std::span<const cf> series(std::size_t i, std::size_t j) const {
        return {samples_.data() + offset(i, j), num_samples()};
    }

private:
    std::size_t offset(std::size_t i, std::size_t j) const { return (i * subcarriers_ + j) * num_samples(); }

    std::size_t antennas_;
    std::size_t subcarriers_;
    std::vector<double> timestamps_;
    std::vector<cf> samples_;
    double carrier_freq_hz_;
    double subcarrier_spacing_hz_;
};

/// Real tensor with the same layout as CsiWindow (CSI power, optionally mean-removed).
class PowerWindow {
public:
    PowerWindow(std::size_t num_antennas, std::size_t num_subcarriers, std::vector<double> timestamps_s,
                std::vector<double> values);

    std::size_t num_antennas() const { return antennas_; }
    std::size_t num_subcarriers() const { return subcarriers_; }
    std::size_t num_samples() const { return timestamps_.size(); }
    const std::vector<double>& timestamps() const { return timestamps_; }
    const std::vector<double>& values() const { return values_; }

    double at(std::size_t i, std::size_t j, std::size_t k) const { return values_[offset(i, j) + k]; }
    std::span<const double> series(std::size_t i, std::size_t j) const {
        return {values_.data() + offset(i, j), num_samples()};
    }

private:
    std::size_t offset(std::size_t i, std::size_t j) const { return (i * subcarriers_ + j) * num_samples(); }

    std::size_t antennas_;
    std::size_t subcarriers_;
    std::vector<double> timestamps_;
    std::vector<double> values_;
};

/// Uniform Doppler bins, symmetric about 0 Hz (odd count, centre bin exactly 0).
class DopplerGrid {
public:
    explicit DopplerGrid(std::vector<double> bins_hz);
    static DopplerGrid symmetric(double max_hz, std::size_t count);

    const std::vector<double>& bins() const { return bins_; }
    std::size_t size() const { return bins_.size(); }
    std::size_t zero_index() const { return bins_.size() / 2; }
    double spacing() const { return bins_[1] - bins_[0]; }
    double max_abs() const { return bins_.back(); }
    double resolution_hz() const { return spacing(); }

private:
    std::vector<double> bins_;
};

/// Candidate relative delays (water path minus strongest static path), all > 0.
class DelayGrid {
public:
    explicit DelayGrid(std::vector<double> bins_s);
    /// (0, 1/(2 df)] sampled at 1/(oversample * M * df).
    static DelayGrid for_band(std::size_t num_subcarriers, double subcarrier_spacing_hz, std::size_t oversample = 4);

    const std::vector<double>& bins() const { return bins_; }
    std::size_t size() const { return bins_.size(); }
    double spacing() const { return bins_.size() > 1 ? bins_[1] - bins_[0] : bins_[0]; }
    double range_m(std::size_t k) const { return kSpeedOfLight * bins_[k]; }

private:
    std::vector<double> bins_;
};

}  // namespace watersense
