#include "crosslayer/channel.hpp"

#include <algorithm>

#include "crosslayer/errors.hpp"

namespace crosslayer {

namespace mcs {

int max_mcs_for_cqi(int cqi) {
    if (cqi < 1 || cqi > 15) throw ValidationError("CQI out of range [1,15]: " + std::to_string(cqi));
    if (cqi <= 2) return 1;  // QPSK 1/2
    if (cqi <= 5) return 2;  // QPSK 3/4
    if (cqi <= 7) return 3;  // 16QAM 1/2
    if (cqi <= 10) return 4; // 16QAM 3/4
    if (cqi <= 12) return 5; // 64QAM 1/2
    return 6;                // 64QAM 3/4
}

int rb_capacity(int mcs_level) {
    if (mcs_level < 1 || mcs_level > kNumLevels)
        throw ValidationError("MCS level out of range [1,6]: " + std::to_string(mcs_level));
    return kRbBytes[mcs_level];
}

int max_mcs(std::span<const int> rb_cqis) {
    if (rb_cqis.empty()) throw ValidationError("max_mcs: empty RB set");
    int worst = 15;
    for (int c : rb_cqis) worst = std::min(worst, c);
    return max_mcs_for_cqi(worst);
}

} // namespace mcs

ChannelProcess::ChannelProcess(const ChannelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(Rng(seed).fork(0x43514931)) {
    if (cfg_.num_clients <= 0 || cfg_.num_rbs <= 0)
        throw ConfigError("channel: num_clients and num_rbs must be positive");
    if (static_cast<int>(cfg_.mean_cqi.size()) != cfg_.num_clients)
        throw ConfigError("channel: mean_cqi must list one value per client");

    grid_.tti = 0;
    grid_.num_clients = cfg_.num_clients;
    grid_.num_rbs = cfg_.num_rbs;
    grid_.cqi.assign(static_cast<size_t>(cfg_.num_clients) * cfg_.num_rbs, 0);
    lo_.resize(cfg_.num_clients);
    hi_.resize(cfg_.num_clients);

    for (int k = 0; k < cfg_.num_clients; ++k) {
        const int mean = cfg_.mean_cqi[k];
        if (mean < 1 || mean > 15)
            throw ConfigError("channel: mean_cqi[" + std::to_string(k) + "] out of range [1,15]");
        const int d = std::min({2, mean - 1, 15 - mean});
        lo_[k] = static_cast<std::uint8_t>(mean - d);
        hi_[k] = static_cast<std::uint8_t>(mean + d);
        for (int n = 0; n < cfg_.num_rbs; ++n) grid_.set(k, n, mean);
    }
}

const CqiGrid& ChannelProcess::step() {
    const double move = (1.0 - cfg_.stay_prob) / 2.0;
    for (int k = 0; k < cfg_.num_clients; ++k) {
        for (int n = 0; n < cfg_.num_rbs; ++n) {
            const double u = rng_.next_double();
            int v = grid_.at(k, n);
            if (u < move) {
                --v; // reflect: an attempted step outside the window is a stay
            } else if (u < 2.0 * move) {
                ++v;
            }
            v = std::clamp(v, static_cast<int>(lo_[k]), static_cast<int>(hi_[k]));
            grid_.set(k, n, v);
        }
    }
    ++grid_.tti;
    return grid_;
}

} // namespace crosslayer
