#include "crosslayer/baselines.hpp"

#include <cmath>

#include "crosslayer/errors.hpp"

namespace crosslayer {

namespace {

bool eligible(const Allocation& alloc, std::span<const long long> queues, int k) {
    return queues[k] > 0 && alloc.capacity_bytes[k] < queues[k];
}

void check_sizes(const CqiGrid& grid, size_t queues) {
    if (static_cast<int>(queues) != grid.num_clients)
        throw ValidationError("scheduler: queue array must match client count");
}

int best_cqi_client(const CqiGrid& grid, const Allocation& alloc,
                    std::span<const long long> queues, int n) {
    int best = -1;
    int best_cqi = 0;
    for (int k = 0; k < grid.num_clients; ++k) {
        if (!eligible(alloc, queues, k)) continue;
        if (grid.at(k, n) > best_cqi) {
            best_cqi = grid.at(k, n);
            best = k;
        }
    }
    return best;
}

} // namespace

Allocation rr_allocate(const CqiGrid& grid, std::span<const long long> queues, RrState& state) {
    check_sizes(grid, queues.size());
    Allocation alloc(grid.num_clients, grid.num_rbs);
    const int K = grid.num_clients;
    for (int n = 0; n < grid.num_rbs; ++n) {
        int picked = -1;
        for (int step = 0; step < K; ++step) {
            const int k = (state.cursor + step) % K;
            if (eligible(alloc, queues, k)) {
                picked = k;
                break;
            }
        }
        if (picked < 0) break;
        alloc.assign(picked, n, grid);
        state.cursor = (picked + 1) % K;
    }
    return alloc;
}

Allocation maxci_allocate(const CqiGrid& grid, std::span<const long long> queues) {
    check_sizes(grid, queues.size());
    Allocation alloc(grid.num_clients, grid.num_rbs);
    for (int n = 0; n < grid.num_rbs; ++n) {
        const int k = best_cqi_client(grid, alloc, queues, n);
        if (k >= 0) alloc.assign(k, n, grid);
    }
    return alloc;
}

Allocation pf_allocate(const CqiGrid& grid, std::span<const long long> queues,
                       std::span<const double> ema_rate) {
    check_sizes(grid, queues.size());
    if (ema_rate.size() != queues.size())
        throw ValidationError("pf_allocate: ema array must match client count");
    Allocation alloc(grid.num_clients, grid.num_rbs);
    for (int n = 0; n < grid.num_rbs; ++n) {
        int best = -1;
        double best_metric = 0.0;
        for (int k = 0; k < grid.num_clients; ++k) {
            if (!eligible(alloc, queues, k)) continue;
            const double inst = mcs::rb_capacity(mcs::max_mcs_for_cqi(grid.at(k, n)));
            const double metric = inst / std::max(ema_rate[k], 1.0);
            if (best < 0 || metric > best_metric) {
                best = k;
                best_metric = metric;
            }
        }
        if (best >= 0) alloc.assign(best, n, grid);
    }
    return alloc;
}

double MlwdfConfig::weight() const {
    return -std::log(drop_prob) / delay_target;
}

Allocation mlwdf_allocate(const CqiGrid& grid, std::span<const long long> queues,
                          std::span<const double> hol_delay, std::span<const double> ema_rate,
                          const MlwdfConfig& cfg) {
    check_sizes(grid, queues.size());
    if (hol_delay.size() != queues.size() || ema_rate.size() != queues.size())
        throw ValidationError("mlwdf_allocate: hol/ema arrays must match client count");
    const double a = cfg.weight();
    Allocation alloc(grid.num_clients, grid.num_rbs);
    for (int n = 0; n < grid.num_rbs; ++n) {
        int best = -1;
        double best_metric = 0.0;
        for (int k = 0; k < grid.num_clients; ++k) {
            if (!eligible(alloc, queues, k)) continue;
            const double inst = mcs::rb_capacity(mcs::max_mcs_for_cqi(grid.at(k, n)));
            const double metric = a * hol_delay[k] * inst / std::max(ema_rate[k], 1.0);
            if (best < 0 || metric > best_metric) {
                best = k;
                best_metric = metric;
            }
        }
        if (best < 0) continue;
        if (best_metric == 0.0) {
            // No waiting data distinguishes the clients; pick by channel quality.
            const int k = best_cqi_client(grid, alloc, queues, n);
            if (k >= 0) alloc.assign(k, n, grid);
        } else {
            alloc.assign(best, n, grid);
        }
    }
    return alloc;
}

} // namespace crosslayer
