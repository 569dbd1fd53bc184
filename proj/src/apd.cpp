#include "crosslayer/apd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crosslayer/errors.hpp"

namespace crosslayer {

namespace {

constexpr int kScaleBucketBytes = 64;
// Solve exactly while items * budget stays below this many DP cells.
constexpr long long kExactCellLimit = 4'000'000;
// At scale, grow the bucket beyond 64 B rather than let the state count explode.
constexpr long long kMaxBucketStates = 12'288;

struct DpCost {
    double u = std::numeric_limits<double>::infinity();
    int count = 0;
};

bool better(const DpCost& a, const DpCost& b) {
    if (a.u != b.u) return a.u < b.u;
    return a.count < b.count;
}

} // namespace

double estimate_rate(std::span<const double> recent_rates, double last_rate, const ApdConfig& cfg) {
    if (cfg.smoothing <= 0.0 || cfg.smoothing >= 1.0)
        throw ValidationError("estimate_rate: smoothing must be in (0,1)");
    double mean = last_rate;
    if (!recent_rates.empty())
        mean = std::accumulate(recent_rates.begin(), recent_rates.end(), 0.0) /
               static_cast<double>(recent_rates.size());
    return cfg.smoothing * last_rate + (1.0 - cfg.smoothing) * mean;
}

DropBudget drop_budget(double tr, const QueueSnapshot& snap, const ApdConfig& cfg) {
    if (snap.s_mac < 0 || snap.s_send < 0 || snap.s_vq < 0 || snap.t_k < 0.0)
        throw ValidationError("drop_budget: negative queue/buffer values");
    if (cfg.guard_time < 0.0) throw ValidationError("drop_budget: negative guard_time");

    DropBudget out;
    const double cp = tr * (snap.t_k + cfg.guard_time);
    if (snap.s_vq == 0) {
        out.lambda = std::numeric_limits<double>::infinity();
        out.s_drop = 0.0;
        return out;
    }
    out.lambda = (cp - static_cast<double>(snap.s_mac) - static_cast<double>(snap.s_send)) /
                 static_cast<double>(snap.s_vq);
    out.s_drop = std::max(0.0, (1.0 - std::min(out.lambda, 1.0)) * static_cast<double>(snap.s_vq));
    return out;
}

DropPlan select_drop_set(std::span<const DropItem> items, double s_drop_bytes, int bucket_bytes) {
    DropPlan plan;
    plan.drop.assign(items.size(), 0);
    if (s_drop_bytes <= 0.0 || items.empty()) return plan;

    long long total = 0;
    for (const auto& it : items) {
        if (it.size_bytes <= 0) throw ValidationError("select_drop_set: non-positive packet size");
        if (it.importance < 0.0) throw ValidationError("select_drop_set: negative importance");
        total += it.size_bytes;
    }

    const long long target = std::min<long long>(static_cast<long long>(std::ceil(s_drop_bytes)), total);
    auto drop_everything = [&] {
        for (size_t i = 0; i < items.size(); ++i) {
            plan.drop[i] = 1;
            plan.dropped_bytes += items[i].size_bytes;
            plan.dropped_importance += items[i].importance;
        }
    };
    if (target >= total) {
        plan.bucket_bytes = 1;
        drop_everything();
        return plan;
    }

    const long long n = static_cast<long long>(items.size());
    int bucket = bucket_bytes;
    if (bucket <= 0) {
        bucket = (n * (target + 1) <= kExactCellLimit) ? 1 : kScaleBucketBytes;
        if (bucket > 1) {
            while ((target + bucket - 1) / bucket > kMaxBucketStates) bucket *= 2;
        }
    }
    plan.bucket_bytes = bucket;

    // Cover at least `states` buckets with minimum total importance, then fewest
    // packets, then the lexicographically earliest index set. Budget rounds up
    // and sizes round down, so a bucket-feasible set covers the true byte target.
    const long long states = (target + bucket - 1) / bucket;
    std::vector<long long> size_b(items.size());
    for (size_t i = 0; i < items.size(); ++i) size_b[i] = items[i].size_bytes / bucket;

    const size_t width = static_cast<size_t>(states) + 1;
    std::vector<DpCost> next(width), cur(width);
    next[0] = {0.0, 0};
    // take_bit[i * width + j]: taking item i at remaining-cover j is optimal.
    std::vector<std::uint64_t> take((items.size() * width + 63) / 64, 0);

    for (long long i = n - 1; i >= 0; --i) {
        cur[0] = {0.0, 0};
        for (long long j = 1; j <= states; ++j) {
            DpCost skip = next[static_cast<size_t>(j)];
            const long long rest = std::max<long long>(0, j - size_b[static_cast<size_t>(i)]);
            DpCost taken = next[static_cast<size_t>(rest)];
            if (std::isfinite(taken.u)) {
                taken.u += items[static_cast<size_t>(i)].importance;
                taken.count += 1;
                if (!better(skip, taken)) { // prefer taking the earlier index on ties
                    cur[static_cast<size_t>(j)] = taken;
                    const size_t bit = static_cast<size_t>(i) * width + static_cast<size_t>(j);
                    take[bit / 64] |= 1ULL << (bit % 64);
                    continue;
                }
            }
            cur[static_cast<size_t>(j)] = skip;
        }
        std::swap(cur, next);
    }

    if (!std::isfinite(next[static_cast<size_t>(states)].u)) {
        // Bucket-rounding starved the cover (sizes rounded down too far); the
        // full queue always covers the true budget.
        drop_everything();
        return plan;
    }

    long long j = states;
    for (size_t i = 0; i < items.size() && j > 0; ++i) {
        const size_t bit = i * width + static_cast<size_t>(j);
        if (take[bit / 64] & (1ULL << (bit % 64))) {
            plan.drop[i] = 1;
            plan.dropped_bytes += items[i].size_bytes;
            plan.dropped_importance += items[i].importance;
            j = std::max<long long>(0, j - size_b[i]);
        }
    }
    return plan;
}

DropPlan apply_apd(std::vector<VideoPacket>& queue, const QueueSnapshot& snap, const ApdConfig& cfg,
                   DropStats* stats) {
    const double tr = estimate_rate(snap.recent_rates, snap.last_rate, cfg);
    const DropBudget budget = drop_budget(tr, snap, cfg);

    std::vector<DropItem> items;
    items.reserve(queue.size());
    for (const auto& p : queue) items.push_back({p.importance, p.size_bytes});

    DropPlan plan = select_drop_set(items, budget.s_drop);
    plan.lambda = budget.lambda;

    if (plan.dropped_bytes > 0) {
        std::vector<VideoPacket> kept;
        kept.reserve(queue.size());
        for (size_t i = 0; i < queue.size(); ++i)
            if (!plan.drop[i]) kept.push_back(std::move(queue[i]));
        queue = std::move(kept);
    }
    if (stats) {
        stats->dropped_packets += std::count(plan.drop.begin(), plan.drop.end(), 1);
        stats->dropped_bytes += plan.dropped_bytes;
        stats->dropped_importance += plan.dropped_importance;
    }
    return plan;
}

} // namespace crosslayer
