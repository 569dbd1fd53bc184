// Reference schedulers the cross-layer allocators are compared against.
// All of them treat a client as eligible while it has queued bytes its
// granted capacity does not yet cover.
#pragma once

#include <span>

#include "crosslayer/allocation.hpp"
#include "crosslayer/channel.hpp"

namespace crosslayer {

struct RrState {
    int cursor = 0; // next client to serve, persists across TTIs
};

// Round robin: RBs dealt one at a time in cyclic client order.
Allocation rr_allocate(const CqiGrid& grid, std::span<const long long> queues, RrState& state);

// Max C/I: each RB to the eligible client with the best CQI on it.
Allocation maxci_allocate(const CqiGrid& grid, std::span<const long long> queues);

// Proportional fair: instantaneous RB rate over EMA throughput.
// The EMA (bytes/s, floored at 1) is maintained by the caller post-TTI.
Allocation pf_allocate(const CqiGrid& grid, std::span<const long long> queues,
                       std::span<const double> ema_rate);

struct MlwdfConfig {
    double drop_prob = 0.05;   // tolerated late-delivery probability
    double delay_target = 0.5; // seconds
    double weight() const;     // -log(drop_prob) / delay_target
};

// M-LWDF: PF metric additionally weighted by head-of-line delay. With all
// HOL delays zero the priorities vanish and the RB falls back to the max-CQI rule.
Allocation mlwdf_allocate(const CqiGrid& grid, std::span<const long long> queues,
                          std::span<const double> hol_delay, std::span<const double> ema_rate,
                          const MlwdfConfig& cfg);

} // namespace crosslayer
