// Uplink MAC: TCP-state-aware ACK scheduling. ACKs close to expiring their
// sender's RTO get absolute priority; flows in slow start outrank flows in
// congestion avoidance; RBs go to whichever client unlocks the most priority.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crosslayer/allocation.hpp"
#include "crosslayer/channel.hpp"

namespace crosslayer {

struct PendingAck {
    int client = 0;
    int index = 0;          // 1-based FIFO position
    double size_bytes = 40; // xi
    double ts = 0.0;        // send time of the TCP packet this ACK confirms
    double sp = 0.0;        // scheduling priority, filled by the allocator
};

struct UplinkConfig {
    double delta = 1e6;   // weight of the deadline branch
    double beta_c = 1e3;  // weight of the slow-start branch
    double gamma = 1.0;   // weight of the congestion-avoidance branch
    double eps_time = 1e-6;
    double eps_bytes = 1.0;
};

// One client's view for the allocator.
struct UplinkClient {
    std::vector<PendingAck> acks; // FIFO order
    double rto = 0.5;
    double cwnd = 0.0;
    double ssthresh = 0.0;
    double eta = 0.5; // rebuffering-history share, in (0,1)
};

// Remaining time before the sender's RTO fires for this ACK.
double ack_deadline(double rto, double now, double ts);

// Priority of one ACK given its deadline d and the flow's window state.
double ack_priority(double d, double threshold, double cwnd, double ssthresh,
                    const UplinkConfig& cfg);

struct ScheduledAcks {
    int count = 0;                   // Z: longest FIFO prefix that fits
    std::vector<std::uint8_t> flags; // tau, monotone prefix
};

// Longest prefix of FIFO ACK sizes whose sum fits within capacity bytes.
ScheduledAcks scheduled_count(std::span<const double> sizes, long long capacity);

// Marginal utility of giving RB n to client k: the gain in summed priority of
// the ACK prefix that fits after adding the RB versus before.
double rb_utility(const CqiGrid& grid, const Allocation& alloc, int k, int n,
                  std::span<const double> prefix_priority, std::span<const double> prefix_sizes);

// Per-RB greedy: assign each RB (in index order) to the active client with the
// highest utility; a capacity-regressing RB is refused for that client; a
// client leaves the active set once its capacity exceeds its pending ACK bytes.
Allocation tu_allocate(const CqiGrid& grid, std::span<const UplinkClient> clients,
                       const UplinkConfig& cfg, double now);

} // namespace crosslayer
