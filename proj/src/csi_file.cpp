// SPDX-License-Identifier: Apache-2.0
#include "watersense/csi_file.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace watersense {

namespace {

template <typename U>
void put_le(std::vector<std::byte>& out, U value) {
    for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<std::byte>((value >> (8 * b)) & 0xFFu));
}

template <typename U>
U get_le(std::span<const std::byte> bytes, std::size_t offset) {
    U value = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) value |= static_cast<U>(std::to_integer<U>(bytes[offset + b]) << (8 * b));
    return value;
}

double get_f64(std::span<const std::byte> bytes, std::size_t offset) {
    return std::bit_cast<double>(get_le<std::uint64_t>(bytes, offset));
}

float get_f32(std::span<const std::byte> bytes, std::size_t offset) {
    return std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset));
}

std::string size_message(std::size_t expected, std::size_t actual) {
    std::ostringstream os;
    os << "CSI data size mismatch: expected " << expected << " bytes, got " << actual;
    return os.str();
}

}  // namespace

const char* to_string(CsiFileErrorKind kind) {
    switch (kind) {
        case CsiFileErrorKind::Io: return "io";
        case CsiFileErrorKind::BadMagic: return "bad-magic";
        case CsiFileErrorKind::BadHeader: return "bad-header";
        case CsiFileErrorKind::SizeMismatch: return "size-mismatch";
        case CsiFileErrorKind::NonMonotoneTimestamps: return "non-monotone-timestamps";
        case CsiFileErrorKind::NonFinite: return "non-finite";
    }
    return "unknown";
}

CsiFileError::CsiFileError(CsiFileErrorKind kind, std::size_t offset, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " at byte " + std::to_string(offset) + ": " + message),
      kind_(kind),
      offset_(offset) {}

std::size_t CsiHeader::payload_bytes() const {
    const std::size_t n = num_samples;
    return n * 8 + static_cast<std::size_t>(num_antennas) * num_subcarriers * n * 8;
}

CsiHeader decode_csi_header(std::span<const std::byte> bytes) {
    if (bytes.size() < kCsiHeaderBytes) {
        throw CsiFileError(CsiFileErrorKind::SizeMismatch, bytes.size(), size_message(kCsiHeaderBytes, bytes.size()));
    }
    if (std::memcmp(bytes.data(), kCsiMagic, sizeof(kCsiMagic)) != 0) {
        throw CsiFileError(CsiFileErrorKind::BadMagic, 0, "expected WSCSI001");
    }
    CsiHeader h;
    h.num_antennas = get_le<std::uint32_t>(bytes, 8);
    h.num_subcarriers = get_le<std::uint32_t>(bytes, 12);
    h.num_samples = get_le<std::uint32_t>(bytes, 16);
    h.carrier_freq_hz = get_f64(bytes, 20);
    h.subcarrier_spacing_hz = get_f64(bytes, 28);
    if (h.num_antennas == 0) throw CsiFileError(CsiFileErrorKind::BadHeader, 8, "zero antennas");
    if (h.num_subcarriers == 0) throw CsiFileError(CsiFileErrorKind::BadHeader, 12, "zero subcarriers");
    if (h.num_samples == 0) throw CsiFileError(CsiFileErrorKind::BadHeader, 16, "zero samples");
    if (!(h.carrier_freq_hz > 0) || !std::isfinite(h.carrier_freq_hz)) {
        throw CsiFileError(CsiFileErrorKind::BadHeader, 20, "carrier frequency must be positive");
    }
    if (!(h.subcarrier_spacing_hz > 0) || !std::isfinite(h.subcarrier_spacing_hz)) {
        throw CsiFileError(CsiFileErrorKind::BadHeader, 28, "subcarrier spacing must be positive");
    }
    return h;
}

std::vector<std::byte> encode_csi(const CsiWindow& window) {
    std::vector<std::byte> out;
    const CsiHeader h{static_cast<std::uint32_t>(window.num_antennas()), static_cast<std::uint32_t>(window.num_subcarriers()),
                      static_cast<std::uint32_t>(window.num_samples()), window.carrier_freq_hz(),
                      window.subcarrier_spacing_hz()};
    out.reserve(h.total_bytes());
    for (const char c : kCsiMagic) out.push_back(static_cast<std::byte>(c));
    put_le(out, h.num_antennas);
    put_le(out, h.num_subcarriers);
    put_le(out, h.num_samples);
    put_le(out, std::bit_cast<std::uint64_t>(h.carrier_freq_hz));
    put_le(out, std::bit_cast<std::uint64_t>(h.subcarrier_spacing_hz));
    for (const double t : window.timestamps()) put_le(out, std::bit_cast<std::uint64_t>(t));
    for (const cf& v : window.samples()) {
        put_le(out, std::bit_cast<std::uint32_t>(v.real()));
        put_le(out, std::bit_cast<std::uint32_t>(v.imag()));
    }
    return out;
}

CsiWindow decode_csi(std::span<const std::byte> bytes) {
    const CsiHeader h = decode_csi_header(bytes);
    if (bytes.size() != h.total_bytes()) {
        throw CsiFileError(CsiFileErrorKind::SizeMismatch, std::min(bytes.size(), h.total_bytes()),
                           size_message(h.total_bytes(), bytes.size()));
    }
    std::size_t offset = kCsiHeaderBytes;
    std::vector<double> times(h.num_samples);
    for (std::size_t k = 0; k < times.size(); ++k, offset += 8) {
        times[k] = get_f64(bytes, offset);
        if (!std::isfinite(times[k])) throw CsiFileError(CsiFileErrorKind::NonFinite, offset, "timestamp is not finite");
        if (k > 0 && !(times[k] > times[k - 1])) {
            throw CsiFileError(CsiFileErrorKind::NonMonotoneTimestamps, offset,
                               "timestamp " + std::to_string(k) + " does not increase");
        }
    }
    std::vector<cf> samples(static_cast<std::size_t>(h.num_antennas) * h.num_subcarriers * h.num_samples);
    for (auto& v : samples) {
        v = cf(get_f32(bytes, offset), get_f32(bytes, offset + 4));
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw CsiFileError(CsiFileErrorKind::NonFinite, offset, "CSI entry is not finite");
        }
        offset += 8;
    }
    return CsiWindow(h.num_antennas, h.num_subcarriers, std::move(times), std::move(samples), h.carrier_freq_hz,
                     h.subcarrier_spacing_hz);
}

void write_csi_file(const CsiWindow& window, const std::filesystem::path& path) {
    const std::vector<std::byte> bytes = encode_csi(window);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CsiFileError(CsiFileErrorKind::Io, 0, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CsiFileError(CsiFileErrorKind::Io, 0, "write failed for " + path.string());
}

CsiWindow read_csi_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsiFileError(CsiFileErrorKind::Io, 0, "cannot open " + path.string());
    std::vector<std::byte> bytes(kCsiHeaderBytes);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    bytes.resize(static_cast<std::size_t>(in.gcount()));
    // Header first, so a bad size or zero count is rejected before the payload is read.
    const CsiHeader h = decode_csi_header(bytes);

    std::error_code ec;
    const auto file_size = static_cast<std::size_t>(std::filesystem::file_size(path, ec));
    if (ec) throw CsiFileError(CsiFileErrorKind::Io, 0, "cannot stat " + path.string());
    if (file_size != h.total_bytes()) {
        throw CsiFileError(CsiFileErrorKind::SizeMismatch, std::min(file_size, h.total_bytes()),
                           size_message(h.total_bytes(), file_size));
    }
    bytes.resize(h.total_bytes());
    in.read(reinterpret_cast<char*>(bytes.data() + kCsiHeaderBytes), static_cast<std::streamsize>(h.payload_bytes()));
    if (static_cast<std::size_t>(in.gcount()) != h.payload_bytes()) {
        throw CsiFileError(CsiFileErrorKind::Io, kCsiHeaderBytes + static_cast<std::size_t>(in.gcount()),
                           "short read from " + path.string());
    }
    return decode_csi(bytes);
}

}  // namespace watersense
