// Downlink MAC: ACK-feedback capacity requirements and the two-phase greedy
// RB allocator that serves requirements first, then queue backlog.
#pragma once

#include <optional>
#include <span>

#include "crosslayer/allocation.hpp"
#include "crosslayer/channel.hpp"

namespace crosslayer {

// One delivered-packet/ACK timing pair: st = the instant the packet's last MAC
// sub-packet left the base station, re = the instant its ACK reached the sender.
struct AckSample {
    double st = 0.0;
    double re = 0.0;
};

struct ProtocolConfig {
    double ack_bytes = 40.0;     // TCP ACK size on the uplink
    double payload_bytes = 1460; // TCP payload per full packet
    double tcp_header = 20.0;
    double ip_header = 20.0;
    double pdcp_header = 2.0;
    double rlc_header = 2.0;
    double mac_header = 2.0;
    double tti_seconds = 0.001;

    // IP packet size before MAC segmentation: payload + TCP/IP/PDCP headers.
    double packet_bytes() const { return payload_bytes + tcp_header + ip_header + pdcp_header; }
};

// Mean ACK feedback rate over the sample window: avg of ack_bytes / (re - st).
// Empty window -> nullopt (caller applies its cold-start policy).
std::optional<double> ack_feedback_rate(std::span<const AckSample> samples, double ack_bytes);

// Bytes per TTI the downlink must provide to sustain the observed feedback
// rate, including per-sub-packet RLC/MAC header overhead.
double capacity_requirement(double feedback_rate, const ProtocolConfig& proto, int subpackets);

// Expected sub-packet count scaled by the CQI history: max(1, round(mean * f/cqi)).
int estimate_subpackets(double nb_mean, double avg_cqi_window, double avg_cqi_now);

// Two-phase allocation: phase 1 serves per-client requirements (clamped to the
// queue) in global max-CQI order; phase 2 spends leftover RBs on clients whose
// capacity still trails their queue. An RB that would lower a client's total
// capacity (MCS regression) is refused for that client. A final regrow pass
// lets a client absorb several leftover RBs at once when that beats its
// current capacity even though single RBs were refused.
Allocation td_allocate(const CqiGrid& grid, std::span<const double> requirement_bytes,
                       std::span<const long long> queue_bytes);

} // namespace crosslayer
