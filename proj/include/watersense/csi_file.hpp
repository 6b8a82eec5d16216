// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "watersense/core.hpp"

namespace watersense {

/// On-disk CSI window, all fields little-endian:
///   "WSCSI001" | u32 N | u32 M | u32 L | f64 carrier | f64 spacing
///   | L x f64 timestamps | N*M*L x (f32 re, f32 im), antenna-major, time fastest.
inline constexpr char kCsiMagic[8] = {'W', 'S', 'C', 'S', 'I', '0', '0', '1'};
inline constexpr std::size_t kCsiHeaderBytes = 8 + 3 * 4 + 2 * 8;

enum class CsiFileErrorKind { Io, BadMagic, BadHeader, SizeMismatch, NonMonotoneTimestamps, NonFinite };

const char* to_string(CsiFileErrorKind kind);

class CsiFileError : public std::runtime_error {
public:
    CsiFileError(CsiFileErrorKind kind, std::size_t offset, const std::string& message);
    CsiFileErrorKind kind() const { return kind_; }
    std::size_t offset() const { return offset_; }

private:
    CsiFileErrorKind kind_;
    std::size_t offset_;
};

struct CsiHeader {
    std::uint32_t num_antennas = 0;
    std::uint32_t num_subcarriers = 0;
    std::uint32_t num_samples = 0;
    double carrier_freq_hz = 0.0;
    double subcarrier_spacing_hz = 0.0;

    std::size_t payload_bytes() const;
    std::size_t total_bytes() const { return kCsiHeaderBytes + payload_bytes(); }
};

/// Parses and checks the fixed header only; zero sizes are rejected here.
CsiHeader decode_csi_header(std::span<const std::byte> bytes);

std::vector<std::byte> encode_csi(const CsiWindow& window);
/// The buffer must hold exactly one window.
CsiWindow decode_csi(std::span<const std::byte> bytes);

void write_csi_file(const CsiWindow& window, const std::filesystem::path& path);
CsiWindow read_csi_file(const std::filesystem::path& path);

}  // namespace watersense
