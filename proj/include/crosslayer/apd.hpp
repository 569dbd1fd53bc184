// Autonomous packet drop: decides which queued video packets to discard so the
// remaining backlog stays deliverable before the playback buffer drains.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crosslayer/video_trace.hpp"

namespace crosslayer {

struct ApdConfig {
    double smoothing = 0.8;      // weight of the latest rate sample
    int history_window = 10;     // number of retained rate samples
    double guard_time = 0.5;     // extra slack seconds beyond the buffer level
};

struct QueueSnapshot {
    long long s_mac = 0;  // bytes queued at MAC
    long long s_send = 0; // bytes in the TCP send window beyond MAC
    long long s_vq = 0;   // bytes in the video queue (droppable)
    double t_k = 0.0;     // playable buffered seconds at the client
    std::vector<double> recent_rates; // transmission-rate samples, newest last
    double last_rate = 0.0;           // rate observed in the latest slot
};

struct DropBudget {
    double lambda = 0.0; // deliverable fraction; +inf when the video queue is empty
    double s_drop = 0.0; // bytes that must be dropped
};

struct DropItem {
    double importance = 0.0;
    long long size_bytes = 0;
};

struct DropPlan {
    std::vector<std::uint8_t> drop; // parallel to the input items
    long long dropped_bytes = 0;
    double dropped_importance = 0.0;
    double lambda = 0.0;
    int bucket_bytes = 1; // granularity the selector actually used
};

// Running totals a client session keeps about its drops.
struct DropStats {
    long long dropped_packets = 0;
    long long dropped_bytes = 0;
    double dropped_importance = 0.0;
};

// Smoothed transmission rate: smoothing * last + (1 - smoothing) * mean(recent).
// With no history the mean term falls back to the last rate.
double estimate_rate(std::span<const double> recent_rates, double last_rate, const ApdConfig& cfg);

// Channel potential CP = TR * (t_k + guard); lambda = (CP - S_mac - S_send) / S_vq
// (+inf when S_vq = 0); S_drop = max(0, (1 - min(lambda, 1)) * S_vq).
DropBudget drop_budget(double tr, const QueueSnapshot& snap, const ApdConfig& cfg);

// Minimum-importance set of packets whose sizes cover s_drop_bytes.
// bucket_bytes = 1 solves exactly; 0 picks automatically (exact while the DP
// table stays small, 64-byte buckets at scale with the budget rounded up and
// sizes rounded down so the chosen set still covers the true budget).
DropPlan select_drop_set(std::span<const DropItem> items, double s_drop_bytes, int bucket_bytes = 0);

// Full pass over a client's video queue: estimate the rate, compute the
// budget, remove the selected packets from `queue`, and record the drop totals.
DropPlan apply_apd(std::vector<VideoPacket>& queue, const QueueSnapshot& snap, const ApdConfig& cfg,
                   DropStats* stats);

} // namespace crosslayer
