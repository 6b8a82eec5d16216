// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "watersense/core.hpp"
#include "watersense/preprocess.hpp"

namespace watersense {

inline constexpr std::size_t kNoBin = std::numeric_limits<std::size_t>::max();
inline constexpr double kMaxConditionNumber = 1e12;

/// Raised when a loaded covariance is too ill-conditioned to invert reliably.
class IllConditionedError : public std::runtime_error {
public:
    IllConditionedError(std::size_t doppler_bin, double condition);
    std::size_t doppler_bin() const { return bin_; }
    double condition() const { return condition_; }

private:
    std::size_t bin_;
    double condition_;
};

enum class CovarianceMode { MultiAntennaSnapshots, SingleAntennaOuter };

struct CovarianceEstimate {
    Eigen::MatrixXcd matrix;  // Hermitian M x M, already smoothed and loaded
    double loading = 0.0;     // value added to the diagonal
    CovarianceMode mode = CovarianceMode::SingleAntennaOuter;
    bool degenerate = false;  // all-zero slice; skip this Doppler bin
    std::size_t doppler_bin = kNoBin;
};

struct CovarianceOptions {
    double loading_db = -20.0;  // relative to tr(R)/M; -inf disables loading
    bool forward_backward = true;
};

/// a(dtau)_j = exp(-j 2 pi df j dtau), j = 0..M-1.
Eigen::VectorXcd steering_vector(double delay_s, std::size_t num_subcarriers, double subcarrier_spacing_hz);

/// Columns are steering vectors for each delay bin.
Eigen::MatrixXcd steering_matrix(const DelayGrid& delays, std::size_t num_subcarriers, double subcarrier_spacing_hz);

/// slice is M x N column-major (as DopplerSpectrum::slice). R = slice slice^H / N, then
/// R_fb = (R + J conj(R) J) / 2, then loading eps * tr(R_fb) / M on the diagonal.
CovarianceEstimate estimate_covariance(std::span<const cd> slice, std::size_t num_subcarriers,
                                       std::size_t num_antennas, const CovarianceOptions& options = {});

/// Condition number of the (Hermitian, loaded) covariance. Uses the trace bound
/// (tr + loading) / loading and only falls back to eigenvalues when the bound is large.
double condition_number(const CovarianceEstimate& cov);

/// P(dtau) = 1 / |a^H R^-1 a| for every column of `steering`.
/// Throws IllConditionedError when the condition number exceeds kMaxConditionNumber.
std::vector<double> mvdr_spectrum(const CovarianceEstimate& cov, const Eigen::MatrixXcd& steering);
std::vector<double> mvdr_spectrum(const CovarianceEstimate& cov, const DelayGrid& delays, double subcarrier_spacing_hz);

/// Doppler x delay power. Rows follow the Doppler grid; the 0 Hz row is never computed
/// and stays zero. Degenerate rows are zero as well and counted in `degenerate_rows`.
struct DopplerRangeHeatmap {
    DopplerGrid doppler;
    DelayGrid delays;
    std::vector<double> power;  // row-major [doppler][delay]
    std::vector<bool> degenerate;
    std::size_t degenerate_rows = 0;

    std::size_t rows() const { return doppler.size(); }
    std::size_t cols() const { return delays.size(); }
    double at(std::size_t g, std::size_t d) const { return power[g * cols() + d]; }
    std::span<const double> row(std::size_t g) const { return {power.data() + g * cols(), cols()}; }
    bool excluded(std::size_t g) const { return g == doppler.zero_index() || degenerate[g]; }
};

DopplerRangeHeatmap build_heatmap(const DopplerSpectrum& spectrum, const DelayGrid& delays,
                                  double subcarrier_spacing_hz, const CovarianceOptions& options = {});

/// CSV: header `doppler_hz,<range_m>...`, then one row per Doppler bin except 0 Hz.
void write_heatmap_csv(const DopplerRangeHeatmap& heatmap, std::ostream& out);

}  // namespace watersense
