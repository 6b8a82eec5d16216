// SPDX-License-Identifier: Apache-2.0
#include "watersense/heatmap.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace watersense {

namespace {

std::string condition_message(std::size_t bin, double condition) {
    std::ostringstream os;
    os << "covariance condition number " << condition << " exceeds " << kMaxConditionNumber;
    if (bin != kNoBin) os << " at Doppler bin " << bin;
    return os.str();
}

}  // namespace

IllConditionedError::IllConditionedError(std::size_t doppler_bin, double condition)
    : std::runtime_error(condition_message(doppler_bin, condition)), bin_(doppler_bin), condition_(condition) {}

Eigen::VectorXcd steering_vector(double delay_s, std::size_t num_subcarriers, double subcarrier_spacing_hz) {
    Eigen::VectorXcd a(static_cast<Eigen::Index>(num_subcarriers));
    for (std::size_t j = 0; j < num_subcarriers; ++j) {
        a(static_cast<Eigen::Index>(j)) =
            std::polar(1.0, kPropagationSign * kTwoPi * subcarrier_spacing_hz * static_cast<double>(j) * delay_s);
    }
    return a;
}

Eigen::MatrixXcd steering_matrix(const DelayGrid& delays, std::size_t num_subcarriers, double subcarrier_spacing_hz) {
    Eigen::MatrixXcd a(static_cast<Eigen::Index>(num_subcarriers), static_cast<Eigen::Index>(delays.size()));
    for (std::size_t d = 0; d < delays.size(); ++d) {
        a.col(static_cast<Eigen::Index>(d)) = steering_vector(delays.bins()[d], num_subcarriers, subcarrier_spacing_hz);
    }
    return a;
}

CovarianceEstimate estimate_covariance(std::span<const cd> slice, std::size_t num_subcarriers,
                                       std::size_t num_antennas, const CovarianceOptions& options) {
    if (num_antennas == 0 || num_subcarriers == 0) throw std::invalid_argument("covariance needs M, N >= 1");
    if (slice.size() != num_subcarriers * num_antennas) throw std::invalid_argument("slice size does not match M x N");
    const auto m = static_cast<Eigen::Index>(num_subcarriers);
    const Eigen::Map<const Eigen::MatrixXcd> x(slice.data(), m, static_cast<Eigen::Index>(num_antennas));

    CovarianceEstimate cov;
    cov.mode = num_antennas > 1 ? CovarianceMode::MultiAntennaSnapshots : CovarianceMode::SingleAntennaOuter;
    cov.matrix = x * x.adjoint() / static_cast<double>(num_antennas);
    if (options.forward_backward) {
        // J conj(R) J reverses both indices of conj(R).
        const Eigen::MatrixXcd back = cov.matrix.conjugate().reverse();
        cov.matrix = 0.5 * (cov.matrix + back);
    }
    const double trace = cov.matrix.trace().real();
    if (!(trace > 0)) {
        cov.degenerate = true;
        return cov;
    }
    if (std::isfinite(options.loading_db)) {
        cov.loading = std::pow(10.0, options.loading_db / 10.0) * trace / static_cast<double>(num_subcarriers);
        cov.matrix.diagonal().array() += cov.loading;
    } else if (options.loading_db > 0) {
        throw std::invalid_argument("loading_db must be finite or -inf");
    }
    return cov;
}

double condition_number(const CovarianceEstimate& cov) {
    const double trace = cov.matrix.trace().real();
    if (cov.loading > 0) {
        const double bound = trace / cov.loading;
        if (bound <= kMaxConditionNumber) return bound;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov.matrix, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

std::vector<double> mvdr_spectrum(const CovarianceEstimate& cov, const Eigen::MatrixXcd& steering) {
    if (cov.degenerate) throw std::invalid_argument("degenerate covariance has no MVDR spectrum");
    if (steering.rows() != cov.matrix.rows()) throw std::invalid_argument("steering length does not match covariance");
    const double condition = condition_number(cov);
    if (!(condition <= kMaxConditionNumber)) throw IllConditionedError(cov.doppler_bin, condition);

    const Eigen::LLT<Eigen::MatrixXcd> llt(cov.matrix);
    if (llt.info() != Eigen::Success) throw IllConditionedError(cov.doppler_bin, condition);
    // a^H R^-1 a = |L^-1 a|^2
    const Eigen::MatrixXcd whitened = llt.matrixL().solve(steering);
    std::vector<double> p(static_cast<std::size_t>(steering.cols()));
    for (Eigen::Index d = 0; d < steering.cols(); ++d) p[static_cast<std::size_t>(d)] = 1.0 / whitened.col(d).squaredNorm();
    return p;
}

std::vector<double> mvdr_spectrum(const CovarianceEstimate& cov, const DelayGrid& delays, double subcarrier_spacing_hz) {
    return mvdr_spectrum(cov, steering_matrix(delays, static_cast<std::size_t>(cov.matrix.rows()), subcarrier_spacing_hz));
}

DopplerRangeHeatmap build_heatmap(const DopplerSpectrum& spectrum, const DelayGrid& delays,
                                  double subcarrier_spacing_hz, const CovarianceOptions& options) {
    const std::size_t rows = spectrum.grid().size();
    const std::size_t m = spectrum.num_subcarriers();
    DopplerRangeHeatmap heatmap{spectrum.grid(), delays, std::vector<double>(rows * delays.size(), 0.0),
                                std::vector<bool>(rows, false), 0};
    const Eigen::MatrixXcd steering = steering_matrix(delays, m, subcarrier_spacing_hz);
    for (std::size_t g = 0; g < rows; ++g) {
        if (g == spectrum.grid().zero_index()) continue;
        const std::vector<cd> slice = spectrum.slice(g);
        CovarianceEstimate cov = estimate_covariance(slice, m, spectrum.num_antennas(), options);
        cov.doppler_bin = g;
        if (cov.degenerate) {
            heatmap.degenerate[g] = true;
            ++heatmap.degenerate_rows;
            continue;
        }
        const std::vector<double> p = mvdr_spectrum(cov, steering);
        std::copy(p.begin(), p.end(), heatmap.power.begin() + static_cast<std::ptrdiff_t>(g * delays.size()));
    }
    return heatmap;
}

void write_heatmap_csv(const DopplerRangeHeatmap& heatmap, std::ostream& out) {
    out << std::setprecision(9) << "doppler_hz";
    for (std::size_t d = 0; d < heatmap.cols(); ++d) out << ',' << heatmap.delays.range_m(d);
    out << '\n';
    for (std::size_t g = 0; g < heatmap.rows(); ++g) {
        if (g == heatmap.doppler.zero_index()) continue;
        out << heatmap.doppler.bins()[g];
        for (double v : heatmap.row(g)) out << ',' << v;
        out << '\n';
    }
}

}  // namespace watersense
