// SPDX-License-Identifier: Apache-2.0
#include "watersense/stream.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <system_error>

#include "watersense/csi_file.hpp"

namespace watersense {

namespace {

void put_u16(std::vector<std::byte>& out, std::uint16_t v) {
    out.push_back(static_cast<std::byte>(v & 0xFFu));
    out.push_back(static_cast<std::byte>(v >> 8));
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::byte>((v >> (8 * b)) & 0xFFu));
}

std::uint32_t get_u32(std::span<const std::byte> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (std::size_t b = 0; b < 4; ++b) v |= std::to_integer<std::uint32_t>(bytes[offset + b]) << (8 * b);
    return v;
}

std::uint16_t get_u16(std::span<const std::byte> bytes, std::size_t offset) {
    return static_cast<std::uint16_t>(std::to_integer<unsigned>(bytes[offset]) |
                                      (std::to_integer<unsigned>(bytes[offset + 1]) << 8));
}

CsiWindow sub_window(const CsiWindow& w, std::size_t first, std::size_t last) {
    const std::size_t len = last - first;
    std::vector<double> times(w.timestamps().begin() + static_cast<std::ptrdiff_t>(first),
                              w.timestamps().begin() + static_cast<std::ptrdiff_t>(last));
    std::vector<cf> samples;
    samples.reserve(w.num_antennas() * w.num_subcarriers() * len);
    for (std::size_t i = 0; i < w.num_antennas(); ++i) {
        for (std::size_t j = 0; j < w.num_subcarriers(); ++j) {
            const auto s = w.series(i, j).subspan(first, len);
            samples.insert(samples.end(), s.begin(), s.end());
        }
    }
    return CsiWindow(w.num_antennas(), w.num_subcarriers(), std::move(times), std::move(samples), w.carrier_freq_hz(),
                     w.subcarrier_spacing_hz());
}

bool same_layout(const CsiWindow& a, const CsiWindow& b) {
    return a.num_antennas() == b.num_antennas() && a.num_subcarriers() == b.num_subcarriers() &&
           a.carrier_freq_hz() == b.carrier_freq_hz() && a.subcarrier_spacing_hz() == b.subcarrier_spacing_hz();
}

[[noreturn]] void throw_errno(const char* what) { throw std::system_error(errno, std::generic_category(), what); }

}  // namespace

std::vector<std::byte> encode_frame(const StreamFrame& frame) {
    std::vector<std::byte> out;
    for (const char c : kFrameMagic) out.push_back(static_cast<std::byte>(c));
    put_u32(out, frame.window_id);
    put_u16(out, frame.session_id);
    put_u16(out, frame.flags);
    const std::vector<std::byte> body = encode_csi(frame.body);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

StreamFrame decode_frame(std::span<const std::byte> datagram) {
    if (datagram.size() < kFrameHeaderBytes) {
        throw CsiFileError(CsiFileErrorKind::SizeMismatch, datagram.size(), "frame shorter than its 16-byte header");
    }
    if (std::memcmp(datagram.data(), kFrameMagic, sizeof(kFrameMagic)) != 0) {
        throw CsiFileError(CsiFileErrorKind::BadMagic, 0, "expected WSFRM001");
    }
    try {
        return StreamFrame{get_u32(datagram, 8), get_u16(datagram, 12), get_u16(datagram, 14),
                           decode_csi(datagram.subspan(kFrameHeaderBytes))};
    } catch (const CsiFileError& e) {
        throw CsiFileError(e.kind(), e.offset() + kFrameHeaderBytes, std::string("frame body: ") + e.what());
    }
}

std::vector<StreamFrame> split_sessions(const CsiWindow& window, std::uint32_t window_id, std::size_t max_frame_bytes) {
    const auto& t = window.timestamps();
    std::vector<std::size_t> starts{0};
    if (t.size() > 1) {
        const double gap = 2.0 * median_interval(t);
        for (std::size_t k = 1; k < t.size(); ++k) {
            if (t[k] - t[k - 1] > gap) starts.push_back(k);
        }
    }
    starts.push_back(t.size());

    std::size_t block = t.size();
    if (max_frame_bytes > 0) {
        const std::size_t per_sample = 8 + window.num_antennas() * window.num_subcarriers() * 8;
        const std::size_t fixed = kFrameHeaderBytes + kCsiHeaderBytes;
        if (max_frame_bytes < fixed + per_sample) throw std::invalid_argument("frame size limit below one sample");
        block = (max_frame_bytes - fixed) / per_sample;
    }

    std::vector<StreamFrame> frames;
    for (std::size_t s = 0; s + 1 < starts.size(); ++s) {
        for (std::size_t a = starts[s]; a < starts[s + 1]; a += block) {
            if (frames.size() > 0xFFFF) throw std::invalid_argument("window needs more than 65536 frames");
            const std::size_t b = std::min(a + block, starts[s + 1]);
            frames.push_back({window_id, static_cast<std::uint16_t>(frames.size()), 0, sub_window(window, a, b)});
        }
    }
    return frames;
}

void StreamAssembler::drop(const std::string& reason) {
    ++dropped_;
    reasons_.push_back(reason);
}

std::vector<AssembledWindow> StreamAssembler::push(std::span<const std::byte> datagram, double now_s) {
    std::vector<AssembledWindow> out;
    std::optional<StreamFrame> frame;
    try {
        frame.emplace(decode_frame(datagram));
    } catch (const std::exception& e) {
        drop(e.what());
    }
    if (frame) {
        const std::uint32_t id = frame->window_id;
        if (last_closed_ && id <= *last_closed_) {
            drop("late frame for closed window " + std::to_string(id));
        } else {
            out = close_before(id);
            Pending& pending = open_[id];
            if (pending.sessions.contains(frame->session_id)) {
                drop("duplicate session " + std::to_string(frame->session_id) + " in window " + std::to_string(id));
            } else if (!pending.sessions.empty() && !same_layout(pending.sessions.begin()->second, frame->body)) {
                drop("session " + std::to_string(frame->session_id) + " layout differs from window " + std::to_string(id));
            } else {
                pending.sessions.emplace(frame->session_id, std::move(frame->body));
            }
            pending.last_arrival_s = now_s;
        }
    }
    auto expired = poll(now_s);
    out.insert(out.end(), std::make_move_iterator(expired.begin()), std::make_move_iterator(expired.end()));
    return out;
}

std::vector<AssembledWindow> StreamAssembler::poll(double now_s) {
    std::vector<AssembledWindow> out;
    for (auto it = open_.begin(); it != open_.end();) {
        if (now_s - it->second.last_arrival_s >= timeout_s_) {
            if (auto w = assemble(it->first, it->second)) out.push_back(std::move(*w));
            last_closed_ = std::max(last_closed_.value_or(0), it->first);
            it = open_.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

std::vector<AssembledWindow> StreamAssembler::close_before(std::uint32_t window_id) {
    std::vector<AssembledWindow> out;
    while (!open_.empty() && open_.begin()->first < window_id) {
        auto it = open_.begin();
        if (auto w = assemble(it->first, it->second)) out.push_back(std::move(*w));
        last_closed_ = std::max(last_closed_.value_or(0), it->first);
        open_.erase(it);
    }
    return out;
}

std::vector<AssembledWindow> StreamAssembler::flush() {
    std::vector<AssembledWindow> out = close_before(std::numeric_limits<std::uint32_t>::max());
    if (!open_.empty()) {
        auto it = open_.begin();
        if (auto w = assemble(it->first, it->second)) out.push_back(std::move(*w));
        last_closed_ = it->first;
        open_.erase(it);
    }
    return out;
}

std::optional<AssembledWindow> StreamAssembler::assemble(std::uint32_t window_id, Pending& pending) {
    if (pending.sessions.empty()) return std::nullopt;
    std::vector<const CsiWindow*> parts;
    for (const auto& [id, w] : pending.sessions) parts.push_back(&w);
    std::stable_sort(parts.begin(), parts.end(),
                     [](const CsiWindow* a, const CsiWindow* b) { return a->timestamps().front() < b->timestamps().front(); });

    std::vector<const CsiWindow*> kept;
    for (const CsiWindow* p : parts) {
        if (!kept.empty() && p->timestamps().front() <= kept.back()->timestamps().back()) {
            drop("overlapping session in window " + std::to_string(window_id));
            continue;
        }
        kept.push_back(p);
    }

    const CsiWindow& first = *kept.front();
    std::vector<double> times;
    for (const CsiWindow* p : kept) times.insert(times.end(), p->timestamps().begin(), p->timestamps().end());
    std::vector<cf> samples;
    samples.reserve(first.num_antennas() * first.num_subcarriers() * times.size());
    for (std::size_t i = 0; i < first.num_antennas(); ++i) {
        for (std::size_t j = 0; j < first.num_subcarriers(); ++j) {
            for (const CsiWindow* p : kept) {
                const auto s = p->series(i, j);
                samples.insert(samples.end(), s.begin(), s.end());
            }
        }
    }
    return AssembledWindow{window_id, kept.size(),
                           CsiWindow(first.num_antennas(), first.num_subcarriers(), std::move(times), std::move(samples),
                                     first.carrier_freq_hz(), first.subcarrier_spacing_hz())};
}

void write_datagram_file(const std::vector<std::vector<std::byte>>& datagrams, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const auto& d : datagrams) {
        std::vector<std::byte> prefix;
        put_u32(prefix, static_cast<std::uint32_t>(d.size()));
        out.write(reinterpret_cast<const char*>(prefix.data()), 4);
        out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size()));
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::vector<std::byte>> read_datagram_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<std::byte>> out;
    std::size_t offset = 0;
    for (;;) {
        std::vector<std::byte> prefix(4);
        in.read(reinterpret_cast<char*>(prefix.data()), 4);
        if (in.gcount() == 0) break;
        if (in.gcount() != 4) throw std::runtime_error("truncated length prefix at byte " + std::to_string(offset));
        const std::uint32_t len = get_u32(prefix, 0);
        std::vector<std::byte> d(len);
        in.read(reinterpret_cast<char*>(d.data()), len);
        if (static_cast<std::size_t>(in.gcount()) != len) {
            throw std::runtime_error("truncated datagram at byte " + std::to_string(offset + 4));
        }
        offset += 4 + len;
        out.push_back(std::move(d));
    }
    return out;
}

UdpReceiver::UdpReceiver(std::uint16_t port, bool loopback_only) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw_errno("socket");
    const int size = 8 << 20;
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &size, sizeof(size));  // best effort
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(loopback_only ? INADDR_LOOPBACK : INADDR_ANY);
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        const int err = errno;
        ::close(fd_);
        throw std::system_error(err, std::generic_category(), "bind");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

UdpReceiver::~UdpReceiver() {
    if (fd_ >= 0) ::close(fd_);
}

std::optional<std::vector<std::byte>> UdpReceiver::receive(double timeout_s) {
    pollfd p{fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(std::ceil(std::max(0.0, timeout_s) * 1000.0)));
    if (ready < 0) throw_errno("poll");
    if (ready == 0) return std::nullopt;
    std::vector<std::byte> buf(kMaxUdpPayload);
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) throw_errno("recv");
    buf.resize(static_cast<std::size_t>(n));
    return buf;
}

UdpSender::UdpSender(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_DGRAM;
    addrinfo* res = nullptr;
    if (const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res); rc != 0) {
        throw std::runtime_error("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    address_be_ = reinterpret_cast<const sockaddr_in*>(res->ai_addr)->sin_addr.s_addr;
    ::freeaddrinfo(res);
    port_be_ = htons(port);
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw_errno("socket");
}

UdpSender::~UdpSender() {
    if (fd_ >= 0) ::close(fd_);
}

void UdpSender::send(std::span<const std::byte> datagram) {
    if (datagram.size() > kMaxUdpPayload) throw std::invalid_argument("datagram exceeds the UDP payload limit");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = port_be_;
    addr.sin_addr.s_addr = address_be_;
    if (::sendto(fd_, datagram.data(), datagram.size(), 0, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) < 0) {
        throw_errno("sendto");
    }
}

}  // namespace watersense
