// Per-(client, RB) CQI evolution and the MCS/capacity tables.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crosslayer/rng.hpp"

namespace crosslayer {

// Channel quality indicator grid for one TTI: clients x resource blocks.
struct CqiGrid {
    long tti = 0;
    int num_clients = 0;
    int num_rbs = 0;
    std::vector<std::uint8_t> cqi; // row-major [client][rb]

    int at(int client, int rb) const { return cqi[static_cast<size_t>(client) * num_rbs + rb]; }
    void set(int client, int rb, int v) { cqi[static_cast<size_t>(client) * num_rbs + rb] = static_cast<std::uint8_t>(v); }
};

// Modulation and coding schemes: QPSK/16QAM/64QAM x code rates 1/2 and 3/4.
// A resource block carries 168 data symbols per TTI, so the payload per RB is
// floor(168 * bits_per_symbol * code_rate / 8) bytes.
namespace mcs {

inline constexpr int kNumLevels = 6;

// Bytes per RB per TTI for MCS levels 1..6 (index 0 unused).
inline constexpr int kRbBytes[kNumLevels + 1] = {0, 21, 31, 42, 63, 63, 94};

// Highest MCS level a CQI supports.
int max_mcs_for_cqi(int cqi);

// Bytes one RB carries in one TTI at the given MCS level.
int rb_capacity(int mcs_level);

// Highest MCS usable across a set of RBs: gated by the worst CQI in the set.
// Throws ValidationError on an empty set.
int max_mcs(std::span<const int> rb_cqis);

} // namespace mcs

struct ChannelConfig {
    int num_clients = 0;
    int num_rbs = 0;
    std::vector<int> mean_cqi; // per client, each in [1,15]
    double stay_prob = 0.9;
};

// Independent birth-death CQI chain per (client, RB). Each chain performs a
// lazy symmetric walk reflected inside [mean-d, mean+d] with
// d = min(2, mean-1, 15-mean), so the stationary distribution is uniform on
// that window and the long-run mean equals the configured per-client mean.
class ChannelProcess {
public:
    ChannelProcess(const ChannelConfig& cfg, std::uint64_t seed);

    // Advance one TTI and return the new grid.
    const CqiGrid& step();

    const CqiGrid& grid() const { return grid_; }

private:
    ChannelConfig cfg_;
    CqiGrid grid_;
    std::vector<std::uint8_t> lo_, hi_; // per client: reflection window
    Rng rng_;
};

} // namespace crosslayer
