// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace watersense {

/// Scalar phase-unwrapping Kalman filter with F = H = 1.
struct KalmanState {
    double x = 0.0;  // filtered unwrapped phase, rad
    double P = 1.0;
    double Q = 0.01;
    double R = 0.25;

    void validate() const;
};

struct KalmanStep {
    KalmanState state;       // after the update
    double unwrapped = 0.0;  // prediction + corrected residual
    double residual = 0.0;   // corrected residual y, always in [-pi, pi]
    int correction = 0;      // -1, 0 or +1 turns added to the raw residual
    double gain = 0.0;
};

/// One predict/correct cycle. `unwrapped` is the measurement moved onto the 2 pi branch
/// nearest the prediction; the filtered x lags a ramp by s(1 - K)/K and is used only to
/// predict. Throws std::invalid_argument when |measured_phase| > pi.
KalmanStep kalman_unwrap_step(const KalmanState& state, double measured_phase);

/// Seeds x with the first measurement, then runs kalman_unwrap_step.
class PhaseTracker {
public:
    explicit PhaseTracker(double q = 0.01, double r = 0.25, double p0 = 1.0);

    KalmanStep update(double measured_phase);
    bool started() const { return started_; }
    const KalmanState& state() const { return state_; }

private:
    KalmanState state_;
    bool started_ = false;
};

/// Unwraps a whole sequence with a fresh tracker.
std::vector<double> kalman_unwrap(std::span<const double> wrapped, double q = 0.01, double r = 0.25);

/// Delta h = lambda / (4 pi) * (phi_next - phi_prev) / sin(theta). Positive means the path
/// lengthened (level fell). Throws for theta outside (0, pi/2].
double phase_to_height(double phi_prev, double phi_next, double wavelength_m, double theta_rad);

/// Path-length change lambda * dphi / (2 pi).
double phase_to_path_change(double delta_phase, double wavelength_m);

struct HeightSeries {
    std::vector<double> times_s;
    std::vector<double> heights_m;
    std::vector<bool> coasting;

    void validate() const;
    bool empty() const { return times_s.empty(); }
};

struct AlignmentScore {
    double mean_abs_error_m = 0.0;
    double std_m = 0.0;  // standard deviation of the absolute error
    std::vector<double> times_s;
    std::vector<double> estimate_m;
    std::vector<double> truth_m;
};

/// Linear interpolation of (t, v) at `at`, clamped to the end values.
double interpolate(std::span<const double> t, std::span<const double> v, double at);

/// Keeps the truth samples inside the estimate's time support, interpolates the estimate
/// onto them, removes each series' mean and shifts both so the truth starts at zero.
/// Throws std::invalid_argument when the supports do not overlap.
AlignmentScore align_and_score(const HeightSeries& estimate, const HeightSeries& truth);

double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace watersense
