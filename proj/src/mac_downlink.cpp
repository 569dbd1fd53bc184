#include "crosslayer/mac_downlink.hpp"

#include <algorithm>
#include <cmath>

#include "crosslayer/errors.hpp"

namespace crosslayer {

std::optional<double> ack_feedback_rate(std::span<const AckSample> samples, double ack_bytes) {
    if (ack_bytes <= 0.0) throw ValidationError("ack_feedback_rate: ack_bytes must be positive");
    if (samples.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& s : samples) {
        if (s.re <= s.st) throw ValidationError("ack_feedback_rate: sample with re <= st");
        sum += ack_bytes / (s.re - s.st);
    }
    return sum / static_cast<double>(samples.size());
}

double capacity_requirement(double feedback_rate, const ProtocolConfig& proto, int subpackets) {
    if (feedback_rate < 0.0) throw ValidationError("capacity_requirement: negative feedback rate");
    if (subpackets < 1) throw ValidationError("capacity_requirement: subpackets must be >= 1");
    const double alpha = proto.ack_bytes / proto.payload_bytes;
    const double data_rate = feedback_rate / alpha;
    const double packet = proto.packet_bytes();
    const double mac_rate =
        data_rate * (packet + subpackets * (proto.rlc_header + proto.mac_header)) / proto.payload_bytes;
    return mac_rate * proto.tti_seconds;
}

int estimate_subpackets(double nb_mean, double avg_cqi_window, double avg_cqi_now) {
    if (avg_cqi_now <= 0.0) throw ValidationError("estimate_subpackets: non-positive current CQI");
    if (nb_mean < 0.0 || avg_cqi_window < 0.0)
        throw ValidationError("estimate_subpackets: negative inputs");
    const long long scaled = std::llround(nb_mean * avg_cqi_window / avg_cqi_now);
    return static_cast<int>(std::max<long long>(1, scaled));
}

namespace {

// Best (client, RB) pair by CQI among candidates that pass the MCS-regression
// check; ties prefer the lowest client, then the lowest RB index.
struct PairPick {
    int client = -1;
    int rb = -1;
    int cqi = 0;
};

template <typename Eligible>
PairPick best_pair(const CqiGrid& grid, const Allocation& alloc, Eligible eligible) {
    PairPick best;
    for (int k = 0; k < grid.num_clients; ++k) {
        if (!eligible(k)) continue;
        for (int n = 0; n < grid.num_rbs; ++n) {
            if (alloc.owner[n] != -1) continue;
            const int c = grid.at(k, n);
            if (c <= best.cqi) continue; // strict: keeps lowest-k/lowest-n on ties
            if (alloc.capacity_with(k, n, grid) < alloc.capacity_bytes[k]) continue;
            best = {k, n, c};
        }
    }
    return best;
}

} // namespace

Allocation td_allocate(const CqiGrid& grid, std::span<const double> requirement_bytes,
                       std::span<const long long> queue_bytes) {
    const int K = grid.num_clients;
    const int N = grid.num_rbs;
    if (static_cast<int>(requirement_bytes.size()) != K || static_cast<int>(queue_bytes.size()) != K)
        throw ValidationError("td_allocate: requirement/queue arrays must match client count");

    Allocation alloc(K, N);

    // Requirements never exceed the backlog actually waiting in the queue.
    std::vector<double> req(K);
    for (int k = 0; k < K; ++k) {
        if (requirement_bytes[k] < 0.0 || queue_bytes[k] < 0)
            throw ValidationError("td_allocate: negative requirement or queue");
        req[k] = std::min(requirement_bytes[k], static_cast<double>(queue_bytes[k]));
        alloc.satisfied[k] = static_cast<double>(alloc.capacity_bytes[k]) >= req[k];
    }

    int unassigned = N;

    // Phase 1: cover requirements in global max-CQI order.
    while (unassigned > 0) {
        const PairPick p = best_pair(grid, alloc, [&](int k) {
            return queue_bytes[k] > 0 && !alloc.satisfied[k];
        });
        if (p.client < 0) break;
        alloc.assign(p.client, p.rb, grid);
        --unassigned;
        if (static_cast<double>(alloc.capacity_bytes[p.client]) >= req[p.client])
            alloc.satisfied[p.client] = 1;
    }

    // Phase 2: spend leftovers on clients whose capacity trails their queue.
    while (unassigned > 0) {
        const PairPick p = best_pair(grid, alloc, [&](int k) {
            return queue_bytes[k] > 0 && alloc.capacity_bytes[k] < queue_bytes[k];
        });
        if (p.client < 0) break;
        alloc.assign(p.client, p.rb, grid);
        --unassigned;
    }

    // Regrow pass: a client may profit from several leftover RBs at once even
    // though each alone was refused (a strong single-RB set blocks mediocre
    // singles, while several mediocre RBs together can beat it).
    for (int k = 0; k < K && unassigned > 0; ++k) {
        if (queue_bytes[k] <= 0) continue;
        while (unassigned > 0 && alloc.capacity_bytes[k] < queue_bytes[k]) {
            std::vector<int> left;
            for (int n = 0; n < N; ++n)
                if (alloc.owner[n] == -1) left.push_back(n);
            std::sort(left.begin(), left.end(), [&](int a, int b) {
                if (grid.at(k, a) != grid.at(k, b)) return grid.at(k, a) > grid.at(k, b);
                return a < b;
            });
            long long best_cap = alloc.capacity_bytes[k];
            int best_m = 0;
            int worst = alloc.min_cqi[k];
            for (size_t m = 1; m <= left.size(); ++m) {
                worst = std::min(worst, grid.at(k, left[m - 1]));
                const long long cap =
                    static_cast<long long>(alloc.rb_sets[k].size() + m) *
                    mcs::rb_capacity(mcs::max_mcs_for_cqi(worst));
                if (cap > best_cap) {
                    best_cap = cap;
                    best_m = static_cast<int>(m);
                    // The shortest extension reaching the queue cap wins; going
                    // further would overshoot J_k by more than one RB's worth.
                    if (cap >= queue_bytes[k]) break;
                }
            }
            if (best_m == 0) break;
            for (int i = 0; i < best_m; ++i) alloc.assign(k, left[i], grid);
            unassigned -= best_m;
        }
    }

    return alloc;
}

} // namespace crosslayer
