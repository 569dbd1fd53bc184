// Per-TTI RB assignment produced by every scheduler.
#pragma once

#include <cstdint>
#include <vector>

#include "crosslayer/channel.hpp"

namespace crosslayer {

struct Allocation {
    int num_clients = 0;
    int num_rbs = 0;
    std::vector<int> owner;                // per RB: owning client, -1 unassigned
    std::vector<std::vector<int>> rb_sets; // per client: RB indices, ascending
    std::vector<int> mcs_level;            // per client: 0 when it holds no RBs
    std::vector<long long> capacity_bytes; // per client this TTI
    std::vector<int> min_cqi;              // per client: worst CQI in its set (16 when empty)
    std::vector<std::uint8_t> satisfied;   // downlink phase-1 requirement met

    Allocation() = default;
    Allocation(int clients, int rbs);

    // Capacity client k would have after also receiving RB n.
    long long capacity_with(int k, int n, const CqiGrid& grid) const;

    // Give RB n to client k and refresh its MCS/capacity.
    void assign(int k, int n, const CqiGrid& grid);

    long long total_capacity() const;
};

} // namespace crosslayer
