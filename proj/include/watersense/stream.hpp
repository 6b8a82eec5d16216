// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "watersense/core.hpp"

namespace watersense {

/// "WSFRM001" | u32 window id | u16 session id | u16 flags, then a WSCSI001 body
/// holding that session's samples.
inline constexpr char kFrameMagic[8] = {'W', 'S', 'F', 'R', 'M', '0', '0', '1'};
inline constexpr std::size_t kFrameHeaderBytes = 16;

struct StreamFrame {
    std::uint32_t window_id = 0;
    std::uint16_t session_id = 0;
    std::uint16_t flags = 0;
    CsiWindow body;
};

std::vector<std::byte> encode_frame(const StreamFrame& frame);
/// Throws CsiFileError; offsets count from the start of the datagram.
StreamFrame decode_frame(std::span<const std::byte> datagram);

inline constexpr std::size_t kMaxUdpPayload = 65507;

/// Cuts a window into its sessions: a new session starts wherever the sample
/// interval exceeds twice the median interval. With max_frame_bytes > 0, sessions
/// are further cut into blocks whose encoded frame fits. Session ids count blocks.
std::vector<StreamFrame> split_sessions(const CsiWindow& window, std::uint32_t window_id,
                                        std::size_t max_frame_bytes = 0);

struct AssembledWindow {
    std::uint32_t window_id = 0;
    std::size_t sessions = 0;
    CsiWindow window;
};

/// Reassembles session frames into windows. A window closes when a frame for a
/// later window id arrives, when it has been idle for `timeout_s` on the caller's
/// clock, or on flush(). Bad, late, duplicate or mismatched frames are dropped
/// and counted; nothing here throws for frame content.
class StreamAssembler {
public:
    explicit StreamAssembler(double timeout_s = 60.0) : timeout_s_(timeout_s) {}

    std::vector<AssembledWindow> push(std::span<const std::byte> datagram, double now_s = 0.0);
    std::vector<AssembledWindow> poll(double now_s);
    std::vector<AssembledWindow> flush();

    std::size_t dropped() const { return dropped_; }
    const std::vector<std::string>& drop_reasons() const { return reasons_; }

private:
    struct Pending {
        std::map<std::uint16_t, CsiWindow> sessions;
        double last_arrival_s = 0.0;
    };

    void drop(const std::string& reason);
    std::vector<AssembledWindow> close_before(std::uint32_t window_id);
    std::optional<AssembledWindow> assemble(std::uint32_t window_id, Pending& pending);

    double timeout_s_;
    std::map<std::uint32_t, Pending> open_;
    std::optional<std::uint32_t> last_closed_;
    std::size_t dropped_ = 0;
    std::vector<std::string> reasons_;
};

/// Recorded stream: u32 little-endian length prefix before each datagram.
void write_datagram_file(const std::vector<std::vector<std::byte>>& datagrams, const std::filesystem::path& path);
std::vector<std::vector<std::byte>> read_datagram_file(const std::filesystem::path& path);

/// Blocking POSIX UDP endpoints for live ingestion.
class UdpReceiver {
public:
    /// Binds to 127.0.0.1 when `loopback_only`, else to all interfaces. port 0 picks a free port.
    explicit UdpReceiver(std::uint16_t port, bool loopback_only = true);
    ~UdpReceiver();
    UdpReceiver(const UdpReceiver&) = delete;
    UdpReceiver& operator=(const UdpReceiver&) = delete;

    std::uint16_t port() const { return port_; }
    /// Waits up to timeout_s; nullopt on timeout.
    std::optional<std::vector<std::byte>> receive(double timeout_s);

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

class UdpSender {
public:
    UdpSender(const std::string& host, std::uint16_t port);
    ~UdpSender();
    UdpSender(const UdpSender&) = delete;
    UdpSender& operator=(const UdpSender&) = delete;

    void send(std::span<const std::byte> datagram);

private:
    int fd_ = -1;
    std::uint32_t address_be_ = 0;
    std::uint16_t port_be_ = 0;
};

}  // namespace watersense
