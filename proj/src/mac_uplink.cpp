#include "crosslayer/mac_uplink.hpp"

#include <algorithm>
#include <cmath>

#include "crosslayer/errors.hpp"

namespace crosslayer {

double ack_deadline(double rto, double now, double ts) {
    return rto - (now - ts);
}

double ack_priority(double d, double threshold, double cwnd, double ssthresh,
                    const UplinkConfig& cfg) {
    if (d < threshold) return cfg.delta / std::max(d, cfg.eps_time);
    if (cwnd < ssthresh) return cfg.beta_c / (ssthresh - cwnd);
    return cfg.gamma / std::max(cwnd - ssthresh, cfg.eps_bytes);
}

ScheduledAcks scheduled_count(std::span<const double> sizes, long long capacity) {
    ScheduledAcks out;
    out.flags.assign(sizes.size(), 0);
    double used = 0.0;
    for (size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] <= 0.0) throw ValidationError("scheduled_count: non-positive ACK size");
        if (used + sizes[i] > static_cast<double>(capacity)) break;
        used += sizes[i];
        out.flags[i] = 1;
        ++out.count;
    }
    return out;
}

namespace {

// Longest prefix index (into arrays of length n+1) whose byte sum fits.
size_t fit_count(std::span<const double> prefix_sizes, long long capacity) {
    size_t lo = 0;
    for (size_t i = 1; i < prefix_sizes.size(); ++i) {
        if (prefix_sizes[i] > static_cast<double>(capacity)) break;
        lo = i;
    }
    return lo;
}

} // namespace

double rb_utility(const CqiGrid& grid, const Allocation& alloc, int k, int n,
                  std::span<const double> prefix_priority, std::span<const double> prefix_sizes) {
    const long long cap_now = alloc.capacity_bytes[k];
    const long long cap_with = alloc.capacity_with(k, n, grid);
    const size_t before = fit_count(prefix_sizes, cap_now);
    const size_t after = fit_count(prefix_sizes, cap_with);
    return prefix_priority[after] - prefix_priority[before];
}

Allocation tu_allocate(const CqiGrid& grid, std::span<const UplinkClient> clients,
                       const UplinkConfig& cfg, double now) {
    const int K = grid.num_clients;
    const int N = grid.num_rbs;
    if (static_cast<int>(clients.size()) != K)
        throw ValidationError("tu_allocate: client view count mismatch");

    Allocation alloc(K, N);

    // Per-client FIFO prefixes of ACK priority and size.
    std::vector<std::vector<double>> prefix_sp(K), prefix_sz(K);
    std::vector<double> pending(K, 0.0);
    std::vector<bool> active(K, false);
    for (int k = 0; k < K; ++k) {
        const auto& cl = clients[k];
        prefix_sp[k].assign(cl.acks.size() + 1, 0.0);
        prefix_sz[k].assign(cl.acks.size() + 1, 0.0);
        const double threshold = cl.eta * cl.rto;
        for (size_t i = 0; i < cl.acks.size(); ++i) {
            const double d = ack_deadline(cl.rto, now, cl.acks[i].ts);
            const double sp = ack_priority(d, threshold, cl.cwnd, cl.ssthresh, cfg);
            prefix_sp[k][i + 1] = prefix_sp[k][i] + sp;
            prefix_sz[k][i + 1] = prefix_sz[k][i] + cl.acks[i].size_bytes;
            pending[k] += cl.acks[i].size_bytes;
        }
        active[k] = !cl.acks.empty();
    }

    for (int n = 0; n < N; ++n) {
        int best = -1;
        double best_l = 0.0;
        for (int k = 0; k < K; ++k) {
            if (!active[k]) continue;
            if (alloc.capacity_with(k, n, grid) < alloc.capacity_bytes[k]) continue;
            const double l = rb_utility(grid, alloc, k, n, prefix_sp[k], prefix_sz[k]);
            if (best < 0 || l > best_l) {
                best = k;
                best_l = l;
            }
        }
        if (best < 0) continue;
        alloc.assign(best, n, grid);
        if (static_cast<double>(alloc.capacity_bytes[best]) > pending[best]) active[best] = false;
    }
    return alloc;
}

} // namespace crosslayer
