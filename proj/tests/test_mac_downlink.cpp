// Tests for ACK-feedback capacity estimation and the two-phase RB allocator.
#include <algorithm>
#include <vector>

#include "crosslayer/errors.hpp"
#include "crosslayer/mac_downlink.hpp"
#include "crosslayer/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

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

// Capacity client k would reach by taking the m best leftover RBs.
long long prefix_capacity(const Allocation& a, const CqiGrid& g, int k) {
    std::vector<int> left;
    for (int n = 0; n < g.num_rbs; ++n)
        if (a.owner[static_cast<size_t>(n)] == -1) left.push_back(n);
    std::sort(left.begin(), left.end(),
              [&](int x, int y) { return g.at(k, x) != g.at(k, y) ? g.at(k, x) > g.at(k, y) : x < y; });
    long long best = a.capacity_bytes[static_cast<size_t>(k)];
    int worst = a.min_cqi[static_cast<size_t>(k)];
    for (size_t m = 1; m <= left.size(); ++m) {
        worst = std::min(worst, g.at(k, left[m - 1]));
        const long long cap = static_cast<long long>(a.rb_sets[static_cast<size_t>(k)].size() + m) *
                              mcs::rb_capacity(mcs::max_mcs_for_cqi(worst));
        best = std::max(best, cap);
    }
    return best;
}

void check_invariants(const Allocation& a, const CqiGrid& g) {
    std::vector<int> owner_from_sets(static_cast<size_t>(g.num_rbs), -1);
    for (int k = 0; k < g.num_clients; ++k) {
        const auto& set = a.rb_sets[static_cast<size_t>(k)];
        for (size_t i = 0; i < set.size(); ++i) {
            if (i > 0) CHECK(set[i - 1] < set[i]);
            CHECK(owner_from_sets[static_cast<size_t>(set[i])] == -1);
            owner_from_sets[static_cast<size_t>(set[i])] = k;
        }
        if (set.empty()) {
            CHECK(a.mcs_level[static_cast<size_t>(k)] == 0);
            CHECK(a.capacity_bytes[static_cast<size_t>(k)] == 0);
        } else {
            int worst = 15;
            for (int n : set) worst = std::min(worst, g.at(k, n));
            CHECK(a.min_cqi[static_cast<size_t>(k)] == worst);
            CHECK(a.mcs_level[static_cast<size_t>(k)] == mcs::max_mcs_for_cqi(worst));
            CHECK(a.capacity_bytes[static_cast<size_t>(k)] ==
                  static_cast<long long>(set.size()) *
                      mcs::rb_capacity(a.mcs_level[static_cast<size_t>(k)]));
        }
    }
    CHECK(owner_from_sets == a.owner);
}

} // namespace

TEST_SUITE("mac_downlink") {

TEST_CASE("ACK feedback rate averages per-sample byte rates") {
    const std::vector<AckSample> two = {{0.0, 0.010}, {0.0, 0.020}};
    auto r = ack_feedback_rate(two, 40.0);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(3000.0));

    const std::vector<AckSample> one = {{0.5, 0.510}};
    r = ack_feedback_rate(one, 40.0);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(4000.0));

    CHECK(!ack_feedback_rate({}, 40.0).has_value());

    const std::vector<AckSample> bad = {{0.5, 0.5}};
    CHECK_THROWS_AS(ack_feedback_rate(bad, 40.0), ValidationError);
    CHECK_THROWS_AS(ack_feedback_rate(two, 0.0), ValidationError);
    CHECK_THROWS_AS(ack_feedback_rate(two, -1.0), ValidationError);
}

TEST_CASE("capacity requirement converts feedback rate to bytes per TTI") {
    const ProtocolConfig proto;
    CHECK(proto.packet_bytes() == doctest::Approx(1502.0));

    // 3000 B/s of ACKs implies 109500 B/s of data; with 4 sub-packets the MAC
    // stream is 109500 * (1502 + 16) / 1460 = 113850 B/s, i.e. 113.85 B/TTI.
    CHECK(capacity_requirement(3000.0, proto, 4) == doctest::Approx(113.85));
    CHECK(capacity_requirement(0.0, proto, 4) == doctest::Approx(0.0));

    // More sub-packets mean more RLC/MAC header overhead.
    double prev = capacity_requirement(3000.0, proto, 1);
    for (int nb = 2; nb <= 8; ++nb) {
        const double cur = capacity_requirement(3000.0, proto, nb);
        CHECK(cur > prev);
        prev = cur;
    }

    // Linear in the feedback rate.
    CHECK(capacity_requirement(6000.0, proto, 4) ==
          doctest::Approx(2.0 * capacity_requirement(3000.0, proto, 4)));

    CHECK_THROWS_AS(capacity_requirement(-1.0, proto, 4), ValidationError);
    CHECK_THROWS_AS(capacity_requirement(3000.0, proto, 0), ValidationError);
}

TEST_CASE("sub-packet estimate scales history by current CQI") {
    CHECK(estimate_subpackets(4.0, 8.0, 8.0) == 4);
    CHECK(estimate_subpackets(4.0, 8.0, 4.0) == 8);
    CHECK(estimate_subpackets(1.0, 4.0, 15.0) == 1); // rounds to 0, floored at 1
    CHECK(estimate_subpackets(0.0, 8.0, 8.0) == 1);
    CHECK_THROWS_AS(estimate_subpackets(4.0, 8.0, 0.0), ValidationError);
    CHECK_THROWS_AS(estimate_subpackets(-1.0, 8.0, 8.0), ValidationError);
    CHECK_THROWS_AS(estimate_subpackets(4.0, -1.0, 8.0), ValidationError);
}

TEST_CASE("allocation arrays must match the client count") {
    const CqiGrid g = make_grid(2, 2, {7, 7, 7, 7});
    const std::vector<double> req1 = {0.0};
    const std::vector<long long> q2 = {10, 10};
    CHECK_THROWS_AS(td_allocate(g, req1, q2), ValidationError);
    const std::vector<double> req2 = {0.0, 0.0};
    const std::vector<long long> q1 = {10};
    CHECK_THROWS_AS(td_allocate(g, req2, q1), ValidationError);
    const std::vector<double> neg = {-1.0, 0.0};
    CHECK_THROWS_AS(td_allocate(g, neg, q2), ValidationError);
    const std::vector<long long> qneg = {10, -5};
    CHECK_THROWS_AS(td_allocate(g, req2, qneg), ValidationError);
}

TEST_CASE("requirements go to the globally best CQI first") {
    // One RB, two hungry clients: the higher CQI wins it.
    const CqiGrid g = make_grid(2, 1, {10, 12});
    const std::vector<double> req = {40.0, 40.0};
    const std::vector<long long> q = {1000, 1000};
    const Allocation a = td_allocate(g, req, q);
    CHECK(a.owner[0] == 1);
    CHECK(a.satisfied[1] == 1);
    CHECK(a.satisfied[0] == 0);

    // On a CQI tie the lower client index wins.
    const CqiGrid tie = make_grid(2, 1, {10, 10});
    const Allocation b = td_allocate(tie, req, q);
    CHECK(b.owner[0] == 0);
}

TEST_CASE("phase one stops at the requirement, phase two fills to the queue") {
    const CqiGrid g = make_grid(1, 3, {7, 7, 7}); // 42 B per RB
    const std::vector<double> req = {40.0};

    // Queue far above capacity: all three RBs are spent.
    const std::vector<long long> deep = {200};
    Allocation a = td_allocate(g, req, deep);
    CHECK(a.rb_sets[0].size() == 3);
    CHECK(a.capacity_bytes[0] == 126);
    CHECK(a.satisfied[0] == 1);

    // Queue of 50: one RB satisfies the requirement, a second covers the
    // queue, the third stays unassigned.
    const std::vector<long long> shallow = {50};
    a = td_allocate(g, req, shallow);
    CHECK(a.rb_sets[0].size() == 2);
    CHECK(a.capacity_bytes[0] == 84);
    CHECK(std::count(a.owner.begin(), a.owner.end(), -1) == 1);
}

TEST_CASE("requirements are clamped to the queue backlog") {
    const CqiGrid g = make_grid(1, 2, {7, 7});
    const std::vector<double> req = {1e9};
    const std::vector<long long> q = {50};
    const Allocation a = td_allocate(g, req, q);
    // 50 bytes of backlog never justify more than two RBs at 42 B each.
    CHECK(a.rb_sets[0].size() == 2);
    CHECK(a.satisfied[0] == 1);
}

TEST_CASE("clients with empty queues receive nothing") {
    const CqiGrid g = make_grid(2, 4, {15, 15, 15, 15, 7, 7, 7, 7});
    const std::vector<double> req = {100.0, 0.0};
    const std::vector<long long> q = {0, 100};
    const Allocation a = td_allocate(g, req, q);
    CHECK(a.rb_sets[0].empty());
    CHECK(a.capacity_bytes[0] == 0);
    CHECK(a.capacity_bytes[1] >= 100);
}

TEST_CASE("an RB that would regress the MCS is refused") {
    // CQI 15 carries 94 B; adding the CQI-1 RB would drop the pair to 42 B.
    const CqiGrid g = make_grid(1, 2, {15, 1});
    const std::vector<double> req = {0.0};
    const std::vector<long long> q = {10000};
    const Allocation a = td_allocate(g, req, q);
    CHECK(a.rb_sets[0] == std::vector<int>{0});
    CHECK(a.capacity_bytes[0] == 94);
    CHECK(a.owner[1] == -1);
}

TEST_CASE("the regrow pass absorbs several mediocre RBs at once") {
    // Single RBs at CQI 5 (31 B each) all lose to the CQI-15 RB (94 B), but
    // taking all three yields 4 * 31 = 124 B.
    const CqiGrid g = make_grid(1, 4, {15, 5, 5, 5});
    const std::vector<double> req = {0.0};
    const std::vector<long long> q = {100000};
    const Allocation a = td_allocate(g, req, q);
    CHECK(a.rb_sets[0].size() == 4);
    CHECK(a.mcs_level[0] == 2);
    CHECK(a.capacity_bytes[0] == 124);
}

TEST_CASE("random grids keep every structural invariant") {
    Rng rng(424242);
    for (int trial = 0; trial < 400; ++trial) {
        const int K = rng.next_int(1, 4);
        const int N = rng.next_int(1, 6);
        std::vector<int> cqi(static_cast<size_t>(K * N));
        for (auto& c : cqi) c = rng.next_int(1, 15);
        const CqiGrid g = make_grid(K, N, cqi);

        std::vector<double> req(static_cast<size_t>(K));
        std::vector<long long> q(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k) {
            req[static_cast<size_t>(k)] = rng.next_int(0, 200);
            q[static_cast<size_t>(k)] = rng.next_int(0, 4) == 0 ? 0 : rng.next_int(1, 400);
        }

        const Allocation a = td_allocate(g, req, q);
        check_invariants(a, g);
        for (int k = 0; k < K; ++k) {
            // Capacity never overshoots the queue by more than one RB's worth.
            if (!a.rb_sets[static_cast<size_t>(k)].empty()) {
                CHECK(q[static_cast<size_t>(k)] > 0);
                const long long one_rb = mcs::rb_capacity(a.mcs_level[static_cast<size_t>(k)]);
                CHECK(a.capacity_bytes[static_cast<size_t>(k)] < q[static_cast<size_t>(k)] + one_rb);
            }
            // A satisfied flag is never raised below the clamped requirement.
            const double eff = std::min(req[static_cast<size_t>(k)],
                                        static_cast<double>(q[static_cast<size_t>(k)]));
            if (a.satisfied[static_cast<size_t>(k)])
                CHECK(static_cast<double>(a.capacity_bytes[static_cast<size_t>(k)]) >= eff);
            // No leftover prefix could still improve a backlogged client.
            if (q[static_cast<size_t>(k)] > a.capacity_bytes[static_cast<size_t>(k)])
                CHECK(prefix_capacity(a, g, k) <= a.capacity_bytes[static_cast<size_t>(k)]);
        }
    }
}

TEST_CASE("greedy throughput stays near the exhaustive optimum") {
    // The greedy is not optimal per grid (max-CQI picks can starve a weaker
    // client of an RB it valued), so the bound is on the ensemble: summed
    // capacity over the batch within 90% of the summed exhaustive optimum,
    // with a coarse per-grid floor to catch gross regressions.
    Rng rng(606060);
    long long greedy_sum = 0;
    long long best_sum = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int K = rng.next_int(1, 3);
        const int N = rng.next_int(1, 4);
        std::vector<int> cqi(static_cast<size_t>(K * N));
        for (auto& c : cqi) c = rng.next_int(1, 15);
        const CqiGrid g = make_grid(K, N, cqi);

        const std::vector<double> req(static_cast<size_t>(K), 0.0);
        const std::vector<long long> q(static_cast<size_t>(K), 1000000);
        const Allocation a = td_allocate(g, req, q);
        check_invariants(a, g);

        const long long best = oracles::exhaustive_max_bytes(g);
        REQUIRE(best > 0);
        CHECK(static_cast<double>(a.total_capacity()) >= 0.6 * static_cast<double>(best));
        greedy_sum += a.total_capacity();
        best_sum += best;
    }
    CHECK(static_cast<double>(greedy_sum) >= 0.9 * static_cast<double>(best_sum));
}

} // TEST_SUITE
