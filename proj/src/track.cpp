// SPDX-License-Identifier: Apache-2.0
#include "watersense/track.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "watersense/core.hpp"

namespace watersense {

void KalmanState::validate() const {
    if (!(P > 0) || !(Q > 0) || !(R > 0)) throw std::invalid_argument("Kalman P, Q and R must be positive");
}

KalmanStep kalman_unwrap_step(const KalmanState& state, double measured_phase) {
    state.validate();
    if (!(std::abs(measured_phase) <= kPi)) throw std::invalid_argument("measured phase must lie in [-pi, pi]");

    const double x_pred = state.x;
    const double p_pred = state.P + state.Q;
    const double wrapped_pred = wrap_phase(x_pred);
    const double raw = measured_phase - wrapped_pred;
    int correction = 0;
    if (raw > kPi) correction = -1;
    else if (raw < -kPi) correction = 1;
    const double y = raw + kTwoPi * correction;
    const double gain = p_pred / (p_pred + state.R);

    KalmanStep step;
    step.state = state;
    step.state.x = x_pred + gain * y;
    step.state.P = (1.0 - gain) * p_pred;
    step.unwrapped = x_pred + y;
    step.residual = y;
    step.correction = correction;
    step.gain = gain;
    return step;
}

PhaseTracker::PhaseTracker(double q, double r, double p0) {
    state_.Q = q;
    state_.R = r;
    state_.P = p0;
    state_.validate();
}

KalmanStep PhaseTracker::update(double measured_phase) {
    if (!started_) {
        if (!(std::abs(measured_phase) <= kPi)) throw std::invalid_argument("measured phase must lie in [-pi, pi]");
        state_.x = measured_phase;
        started_ = true;
        KalmanStep first;
        first.state = state_;
        first.unwrapped = measured_phase;
        return first;
    }
    KalmanStep step = kalman_unwrap_step(state_, measured_phase);
    state_ = step.state;
    return step;
}

std::vector<double> kalman_unwrap(std::span<const double> wrapped, double q, double r) {
    PhaseTracker tracker(q, r);
    std::vector<double> out;
    out.reserve(wrapped.size());
    for (double p : wrapped) out.push_back(tracker.update(p).unwrapped);
    return out;
}

double phase_to_height(double phi_prev, double phi_next, double wavelength_m, double theta_rad) {
    if (!(theta_rad > 0) || theta_rad > kPi / 2) throw std::invalid_argument("reflection angle must be in (0, pi/2]");
    if (!(wavelength_m > 0)) throw std::invalid_argument("wavelength must be positive");
    return wavelength_m / (4.0 * kPi) * (phi_next - phi_prev) / std::sin(theta_rad);
}

double phase_to_path_change(double delta_phase, double wavelength_m) {
    return wavelength_m * delta_phase / kTwoPi;
}

void HeightSeries::validate() const {
    if (times_s.size() != heights_m.size()) throw std::invalid_argument("height series lengths differ");
    if (!coasting.empty() && coasting.size() != times_s.size()) throw std::invalid_argument("coasting flags length differs");
    for (std::size_t k = 1; k < times_s.size(); ++k) {
        if (!(times_s[k] > times_s[k - 1])) throw std::invalid_argument("height series times must increase");
    }
}

double interpolate(std::span<const double> t, std::span<const double> v, double at) {
    if (t.empty() || t.size() != v.size()) throw std::invalid_argument("interpolation needs matching nonempty inputs");
    if (at <= t.front()) return v.front();
    if (at >= t.back()) return v.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), at) - t.begin());
    const std::size_t lo = hi - 1;
    return v[lo] + (v[hi] - v[lo]) * (at - t[lo]) / (t[hi] - t[lo]);
}

AlignmentScore align_and_score(const HeightSeries& estimate, const HeightSeries& truth) {
    estimate.validate();
    truth.validate();
    if (estimate.empty() || truth.empty()) throw std::invalid_argument("alignment needs nonempty series");
    const double lo = estimate.times_s.front();
    const double hi = estimate.times_s.back();
    constexpr double kSlack = 1e-9;

    AlignmentScore score;
    for (std::size_t k = 0; k < truth.times_s.size(); ++k) {
        const double t = truth.times_s[k];
        if (t < lo - kSlack || t > hi + kSlack) continue;
        score.times_s.push_back(t);
        score.truth_m.push_back(truth.heights_m[k]);
        score.estimate_m.push_back(interpolate(estimate.times_s, estimate.heights_m, t));
    }
    if (score.times_s.empty()) throw std::invalid_argument("estimate and truth do not overlap in time");

    const auto n = static_cast<double>(score.times_s.size());
    const double est_mean = std::accumulate(score.estimate_m.begin(), score.estimate_m.end(), 0.0) / n;
    const double truth_mean = std::accumulate(score.truth_m.begin(), score.truth_m.end(), 0.0) / n;
    const double shift = score.truth_m.front() - truth_mean;
    for (auto& v : score.estimate_m) v -= est_mean + shift;
    for (auto& v : score.truth_m) v -= truth_mean + shift;

    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < score.times_s.size(); ++k) {
        const double e = std::abs(score.estimate_m[k] - score.truth_m[k]);
        sum += e;
        sum_sq += e * e;
    }
    score.mean_abs_error_m = sum / n;
    score.std_m = std::sqrt(std::max(0.0, sum_sq / n - score.mean_abs_error_m * score.mean_abs_error_m));
    return score;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson needs two equal series of length >= 2");
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma) * (a[k] - ma);
        sbb += (b[k] - mb) * (b[k] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace watersense
