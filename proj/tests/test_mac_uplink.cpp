// Tests for ACK deadlines, priority branches, and the per-RB greedy uplink.
#include <algorithm>
#include <vector>

#include "crosslayer/errors.hpp"
#include "crosslayer/mac_uplink.hpp"
#include "crosslayer/rng.hpp"
#include "doctest.h"

using namespace crosslayer;

namespace {

CqiGrid make_grid(int clients, int rbs, const std::vector<int>& cqi) {
    CqiGrid g;
    g.num_clients = clients;
    g.num_rbs = rbs;
    g.cqi.resize(cqi.size());
    for (size_t i = 0; i < cqi.size(); ++i) g.cqi[i] = static_cast<std::uint8_t>(cqi[i]);
    return g;
}

PendingAck ack(int client, int index, double size, double ts) {
    PendingAck a;
    a.client = client;
    a.index = index;
    a.size_bytes = size;
    a.ts = ts;
    return a;
}

void check_ownership(const Allocation& a, const CqiGrid& g) {
    std::vector<int> owner(static_cast<size_t>(g.num_rbs), -1);
    for (int k = 0; k < g.num_clients; ++k) {
        const auto& set = a.rb_sets[static_cast<size_t>(k)];
        for (size_t i = 0; i < set.size(); ++i) {
            if (i > 0) CHECK(set[i - 1] < set[i]);
            CHECK(owner[static_cast<size_t>(set[i])] == -1);
            owner[static_cast<size_t>(set[i])] = k;
        }
        if (!set.empty()) {
            int worst = 15;
            for (int n : set) worst = std::min(worst, g.at(k, n));
            CHECK(a.mcs_level[static_cast<size_t>(k)] == mcs::max_mcs_for_cqi(worst));
            CHECK(a.capacity_bytes[static_cast<size_t>(k)] ==
                  static_cast<long long>(set.size()) *
                      mcs::rb_capacity(a.mcs_level[static_cast<size_t>(k)]));
        }
    }
    CHECK(owner == a.owner);
}

} // namespace

TEST_SUITE("mac_uplink") {

TEST_CASE("deadline is the RTO minus the elapsed time") {
    CHECK(ack_deadline(1.0, 0.4, 0.0) == doctest::Approx(0.6));
    CHECK(ack_deadline(0.5, 2.0, 1.9) == doctest::Approx(0.4));
    // Already expired: negative headroom.
    CHECK(ack_deadline(0.5, 2.0, 1.0) == doctest::Approx(-0.5));
}

TEST_CASE("priority picks the deadline, slow-start, or avoidance branch") {
    const UplinkConfig cfg;

    // Urgent: inside the threshold the weight is divided by the headroom.
    CHECK(ack_priority(0.005, 0.25, 100000.0, 1000.0, cfg) == doctest::Approx(2e8));

    // Slow start: weight over the distance to ssthresh.
    CHECK(ack_priority(0.4, 0.25, 0.0, 14600.0, cfg) == doctest::Approx(1e3 / 14600.0));

    // Congestion avoidance: weight over the overshoot, guarded at one byte.
    CHECK(ack_priority(0.4, 0.25, 30000.0, 14600.0, cfg) ==
          doctest::Approx(1.0 / 15400.0));
    CHECK(ack_priority(0.4, 0.25, 14600.0, 14600.0, cfg) == doctest::Approx(1.0));

    // An expired deadline is clamped to eps_time, not divided by zero.
    CHECK(ack_priority(0.0, 0.25, 0.0, 14600.0, cfg) == doctest::Approx(1e6 / 1e-6));
    CHECK(ack_priority(-0.3, 0.25, 0.0, 14600.0, cfg) == doctest::Approx(1e6 / 1e-6));

    // The deadline branch wins even when the flow is in slow start.
    const double urgent = ack_priority(0.01, 0.25, 0.0, 14600.0, cfg);
    CHECK(urgent == doctest::Approx(1e8));
}

TEST_CASE("urgent ACKs outrank window-state priorities for sane parameters") {
    const UplinkConfig cfg;
    Rng rng(8181);
    for (int trial = 0; trial < 200; ++trial) {
        const double rto = 0.2 + 3.8 * rng.next_double();
        const double threshold = 0.5 * rto;
        const double d_urgent = threshold * rng.next_double();
        const double d_calm = threshold + (rto - threshold) * rng.next_double();
        const double cwnd = rng.next_int(1460, 100000);
        const double ssthresh = rng.next_int(2920, 65535);
        const double gap = std::abs(cwnd - ssthresh);
        if (gap < 1.0) continue;
        const double hot = ack_priority(d_urgent, threshold, cwnd, ssthresh, cfg);
        const double cold = ack_priority(d_calm, threshold, cwnd, ssthresh, cfg);
        CHECK(hot > cold);
        // Within the deadline branch, less headroom means more priority.
        const double hotter = ack_priority(d_urgent / 2.0, threshold, cwnd, ssthresh, cfg);
        CHECK(hotter >= hot);
    }
}

TEST_CASE("scheduled count takes the longest FIFO prefix that fits") {
    const std::vector<double> sizes = {40.0, 40.0, 40.0};
    ScheduledAcks s = scheduled_count(sizes, 100);
    CHECK(s.count == 2);
    CHECK(s.flags == std::vector<std::uint8_t>{1, 1, 0});

    s = scheduled_count(sizes, 120);
    CHECK(s.count == 3);
    s = scheduled_count(sizes, 80);
    CHECK(s.count == 2);
    s = scheduled_count(sizes, 39);
    CHECK(s.count == 0);
    s = scheduled_count({}, 100);
    CHECK(s.count == 0);
    CHECK(s.flags.empty());

    const std::vector<double> bad = {40.0, 0.0};
    CHECK_THROWS_AS(scheduled_count(bad, 100), ValidationError);
}

TEST_CASE("scheduled flags always form a monotone prefix") {
    Rng rng(9292);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = rng.next_int(1, 10);
        std::vector<double> sizes(static_cast<size_t>(n));
        double total = 0.0;
        for (auto& x : sizes) {
            x = rng.next_int(1, 120);
            total += x;
        }
        const long long cap = rng.next_int(0, static_cast<int>(total) + 50);
        const ScheduledAcks s = scheduled_count(sizes, cap);
        CHECK(s.flags.size() == sizes.size());
        int count = 0;
        double used = 0.0;
        bool seen_zero = false;
        for (size_t i = 0; i < sizes.size(); ++i) {
            if (s.flags[i]) {
                CHECK(!seen_zero);
                ++count;
                used += sizes[i];
            } else {
                seen_zero = true;
            }
        }
        CHECK(count == s.count);
        CHECK(used <= static_cast<double>(cap));
        // The first unserved ACK would not have fit.
        if (count < n) CHECK(used + sizes[static_cast<size_t>(count)] > static_cast<double>(cap));
    }
}

TEST_CASE("RB utility is the priority gain of the newly fitting prefix") {
    const CqiGrid g = make_grid(1, 1, {8}); // 63 B per RB
    const Allocation empty(1, 1);
    const std::vector<double> prefix_sp = {0.0, 5.0, 12.0};
    const std::vector<double> prefix_sz = {0.0, 40.0, 80.0};
    // One RB fits the first ACK only.
    CHECK(rb_utility(g, empty, 0, 0, prefix_sp, prefix_sz) == doctest::Approx(5.0));

    const CqiGrid wide = make_grid(1, 1, {13}); // 94 B per RB
    CHECK(rb_utility(wide, empty, 0, 0, prefix_sp, prefix_sz) == doctest::Approx(12.0));

    const CqiGrid narrow = make_grid(1, 1, {1}); // 21 B per RB, nothing fits
    CHECK(rb_utility(narrow, empty, 0, 0, prefix_sp, prefix_sz) == doctest::Approx(0.0));
}

TEST_CASE("the client view count must match the grid") {
    const CqiGrid g = make_grid(2, 2, {8, 8, 8, 8});
    const std::vector<UplinkClient> one(1);
    CHECK_THROWS_AS(tu_allocate(g, one, UplinkConfig{}, 0.0), ValidationError);
}

TEST_CASE("an expired deadline beats any window-state priority") {
    const CqiGrid g = make_grid(2, 1, {8, 8});
    std::vector<UplinkClient> clients(2);
    // Client 0 sits in slow start with a fresh ACK.
    clients[0].cwnd = 2920;
    clients[0].ssthresh = 5840;
    clients[0].acks = {ack(0, 1, 40, 0.99)};
    // Client 1 is deep in congestion avoidance but its ACK is about to expire.
    clients[1].cwnd = 30000;
    clients[1].ssthresh = 14600;
    clients[1].rto = 0.5;
    clients[1].acks = {ack(1, 1, 40, 0.1)};
    const Allocation a = tu_allocate(g, clients, UplinkConfig{}, 1.0);
    CHECK(a.owner[0] == 1);
}

TEST_CASE("slow-start flows outrank congestion-avoidance flows") {
    const CqiGrid g = make_grid(2, 1, {8, 8});
    std::vector<UplinkClient> clients(2);
    clients[0].cwnd = 30000;
    clients[0].ssthresh = 14600;
    clients[0].acks = {ack(0, 1, 40, 0.0)};
    clients[1].cwnd = 2920;
    clients[1].ssthresh = 5840;
    clients[1].acks = {ack(1, 1, 40, 0.0)};
    // Both ACKs are fresh relative to their RTOs.
    const Allocation a = tu_allocate(g, clients, UplinkConfig{}, 0.1);
    CHECK(a.owner[0] == 1);
}

TEST_CASE("FIFO order gates urgency: a huge head ACK blocks the queue") {
    const CqiGrid g = make_grid(2, 1, {8, 8});
    std::vector<UplinkClient> clients(2);
    // Client 0's urgent ACK hides behind a 500 B head that does not fit one RB.
    clients[0].cwnd = 2920;
    clients[0].ssthresh = 65535;
    clients[0].rto = 0.5;
    clients[0].acks = {ack(0, 1, 500, 0.98), ack(0, 2, 40, 0.55)};
    // Client 1 offers a modest but realizable gain.
    clients[1].cwnd = 30000;
    clients[1].ssthresh = 14600;
    clients[1].acks = {ack(1, 1, 40, 0.98)};
    const Allocation a = tu_allocate(g, clients, UplinkConfig{}, 1.0);
    CHECK(a.owner[0] == 1);
}

TEST_CASE("clients without pending ACKs receive nothing") {
    const CqiGrid g = make_grid(2, 3, {15, 15, 15, 8, 8, 8});
    std::vector<UplinkClient> clients(2);
    clients[1].acks = {ack(1, 1, 40, 0.0)};
    const Allocation a = tu_allocate(g, clients, UplinkConfig{}, 0.1);
    CHECK(a.rb_sets[0].empty());
    CHECK(!a.rb_sets[1].empty());
}

TEST_CASE("a client stops taking RBs once its pending bytes are covered") {
    const CqiGrid g = make_grid(1, 4, {8, 8, 8, 8});
    std::vector<UplinkClient> clients(1);
    clients[0].acks = {ack(0, 1, 40, 0.0)};
    const Allocation a = tu_allocate(g, clients, UplinkConfig{}, 0.1);
    // One 63 B RB already covers the 40 B of pending ACKs.
    CHECK(a.rb_sets[0].size() == 1);
    CHECK(std::count(a.owner.begin(), a.owner.end(), -1) == 3);
}

TEST_CASE("zero-utility RBs still flow to a backlogged client") {
    const CqiGrid g = make_grid(1, 3, {8, 8, 8});
    std::vector<UplinkClient> clients(1);
    // 540 B pending, nothing fits until capacity reaches 500.
    clients[0].acks = {ack(0, 1, 500, 0.0), ack(0, 2, 40, 0.0)};
    const Allocation a = tu_allocate(g, clients, UplinkConfig{}, 0.1);
    CHECK(a.rb_sets[0].size() == 3);
    CHECK(a.capacity_bytes[0] == 189);
}

TEST_CASE("random instances keep ownership and the capacity cap") {
    Rng rng(515151);
    const UplinkConfig cfg;
    for (int trial = 0; trial < 300; ++trial) {
        const int K = rng.next_int(1, 4);
        const int N = rng.next_int(1, 6);
        std::vector<int> cqi(static_cast<size_t>(K * N));
        for (auto& c : cqi) c = rng.next_int(1, 15);
        const CqiGrid g = make_grid(K, N, cqi);

        const double now = 1.0;
        std::vector<UplinkClient> clients(static_cast<size_t>(K));
        std::vector<double> pending(static_cast<size_t>(K), 0.0);
        for (int k = 0; k < K; ++k) {
            auto& cl = clients[static_cast<size_t>(k)];
            cl.rto = 0.2 + 0.6 * rng.next_double();
            cl.cwnd = rng.next_int(1460, 60000);
            cl.ssthresh = rng.next_int(2920, 65535);
            const int n_acks = rng.next_int(0, 5);
            for (int i = 0; i < n_acks; ++i) {
                const double size = rng.next_int(20, 120);
                cl.acks.push_back(ack(k, i + 1, size, now - 0.5 * rng.next_double()));
                pending[static_cast<size_t>(k)] += size;
            }
        }

        const Allocation a = tu_allocate(g, clients, cfg, now);
        check_ownership(a, g);
        for (int k = 0; k < K; ++k) {
            if (clients[static_cast<size_t>(k)].acks.empty()) {
                CHECK(a.rb_sets[static_cast<size_t>(k)].empty());
                continue;
            }
            // Capacity never exceeds the pending bytes by more than one RB.
            if (!a.rb_sets[static_cast<size_t>(k)].empty()) {
                const long long one_rb = mcs::rb_capacity(a.mcs_level[static_cast<size_t>(k)]);
                CHECK(static_cast<double>(a.capacity_bytes[static_cast<size_t>(k)]) <=
                      pending[static_cast<size_t>(k)] + static_cast<double>(one_rb));
            }
        }
    }
}

} // TEST_SUITE
