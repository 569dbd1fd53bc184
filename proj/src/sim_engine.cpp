// Per-TTI simulation loop: channel, segment requests, packet drop, TCP
// packaging, MAC scheduling both ways, delayed deliveries, playback, metrics.
#include "crosslayer/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <limits>
#include <ostream>

#include "crosslayer/errors.hpp"
#include "crosslayer/rng.hpp"

namespace crosslayer {
namespace {

constexpr int kFramesPerSegmentEngine = 60;

// One contiguous chunk of a video packet inside the TCP byte stream.
struct StreamSpan {
    long long start = 0;
    long long len = 0;
    long frame = 0;        // global frame index, 0-based
    bool last_chunk = false; // completes its packet when delivered in order
};

struct MacPacket {
    long long seq = 0;        // TCP stream offset
    long long payload = 0;    // TCP payload bytes
    long long mac_bytes = 0;  // payload + headers + per-sub-packet overhead
    long long remaining = 0;  // MAC bytes not yet transmitted
    double enqueue_time = 0.0;
    double tcp_send_time = 0.0;
    int subpackets = 1;
    bool retransmit = false;
};

struct DlArrival {
    long tti = 0;
    long long seq = 0;
    long long payload = 0;
    double tcp_send_time = 0.0;
    double depart_time = 0.0;
    bool lost = false;
};

struct UlAckRecord {
    double created = 0.0;
    double tcp_send_time = 0.0; // of the data packet this ACK confirms
    double depart_time = 0.0;   // when that packet left the base station
    long long ack_no = 0;
    double size_bytes = 40.0;
};

struct AckInFlight {
    long tti = 0;
    long long ack_no = 0;
    double data_depart_time = 0.0;
};

struct ByteInterval {
    long long lo = 0;
    long long hi = 0;
};

// Insert [lo, hi) into a sorted disjoint interval list, merging overlaps.
void add_interval(std::vector<ByteInterval>& v, long long lo, long long hi) {
    if (lo >= hi) return;
    std::vector<ByteInterval> out;
    out.reserve(v.size() + 1);
    bool placed = false;
    for (const auto& iv : v) {
        if (iv.hi < lo) {
            out.push_back(iv);
        } else if (hi < iv.lo) {
            if (!placed) {
                out.push_back({lo, hi});
                placed = true;
            }
            out.push_back(iv);
        } else {
            lo = std::min(lo, iv.lo);
            hi = std::max(hi, iv.hi);
        }
    }
    if (!placed) out.push_back({lo, hi});
    std::sort(out.begin(), out.end(), [](const ByteInterval& a, const ByteInterval& b) { return a.lo < b.lo; });
    v = std::move(out);
}

struct Session {
    int id = 0;
    VideoSequence video;
    int total_segments = 0;
    long total_frames = 0;
    int next_segment = 0;       // next segment index to request
    long frames_admitted = 0;   // frames covered by requested segments

    // Droppable video queue; the head may be partially packaged already.
    std::deque<VideoPacket> vq;
    long long vq_bytes = 0;       // unpackaged bytes in vq
    long long head_consumed = 0;  // packaged bytes of vq.front()

    std::vector<int> frame_remaining; // packets still expected per frame
    long ready_upto = 0;              // first frame not yet complete

    long long generated_bytes = 0;
    double total_importance = 0.0;
    DropStats drops;

    TcpFlow flow;
    std::deque<StreamSpan> spans;
    long long stream_packaged = 0; // payload bytes handed to TCP so far

    std::deque<MacPacket> mac_queue;
    long long mac_bytes = 0;
    long long payload_in_mac = 0;

    std::deque<DlArrival> dl_air;
    std::deque<AckInFlight> ul_air;

    // Receiver state.
    long long recv_prefix = 0;
    std::vector<ByteInterval> ooo;
    std::deque<UlAckRecord> ul_acks;

    // Feedback used by the requirement-driven downlink scheduler.
    std::deque<AckSample> ack_samples;
    std::deque<double> cqi_history;
    std::deque<int> nb_history;

    // Transmission-rate samples feeding the drop decision.
    std::vector<double> rate_samples;
    long busy_ttis_window = 0;
    long long busy_delivered_window = 0;
    double last_rate = 0.0;
    bool have_rate = false;

    // Playback.
    bool started = false;
    long startup_tti = -1;
    long frames_played = 0;
    double play_accum = 0.0;
    bool stalled = false;
    long long rebuffer_events = 0;
    double rebuffer_seconds = 0.0;

    // Counters.
    long long mac_delivered = 0;
    long long mac_expired = 0;
    long long timeouts = 0;
    long long retransmitted_packets = 0;
    long long tti_dl_bytes = 0; // reset each TTI, feeds the downlink EMA
    long long tti_ul_bytes = 0; // reset each TTI, feeds the uplink EMA

    double dl_ema = 0.0;
    double ul_ema = 0.0;

    Session(const TcpConfig& tcp) : flow(tcp) {}
};

class Simulator {
public:
    Simulator(const SimConfig& cfg, const RunSinks& sinks) : cfg_(cfg), sinks_(sinks) { validate(); }

    MetricsReport run();

private:
    void validate() const;
    void setup();
    long global_frame(const VideoPacket& p) const {
        return static_cast<long>(p.segment_index - 1) * kFramesPerSegmentEngine + (p.frame_index - 1);
    }

    double row_mean_cqi(const CqiGrid& grid, int k) const;
    int rb_bytes_now(const CqiGrid& grid, int k) const;
    MacPacket make_mac_packet(long long seq, long long payload, double tcp_send_time, bool retx,
                              int rb_bytes, double now) const;
    void enqueue_retransmit(Session& s, MacPacket mp);

    void process_arrivals(Session& s, long t, double now);
    void process_ack_arrivals(Session& s, long t, double now);
    void check_timeout(Session& s, double now);
    void request_segments(Session& s, double now);
    void run_drop_pass(Session& s, double now);
    void package_tcp(Session& s, const CqiGrid& dl, double now);
    std::vector<double> downlink_requirements(const CqiGrid& dl, long t) const;
    void expire_mac_queue(Session& s, double now);
    Allocation schedule_downlink(const CqiGrid& dl, long t, double now);
    void transmit_downlink(Session& s, long long budget, long t, double now);
    Allocation schedule_uplink(const CqiGrid& ul, double now);
    int transmit_uplink(Session& s, long long budget, long t);
    void advance_playback(Session& s);
    void sample_rates_and_emas(long t);
    void emit_rows(long t);
    MetricsReport finalize() const;

    SimConfig cfg_;
    RunSinks sinks_;
    std::vector<Session> sessions_;
    std::unique_ptr<ChannelProcess> dl_channel_;
    std::unique_ptr<ChannelProcess> ul_channel_;
    Rng loss_rng_{1};
    RrState rr_dl_;
    RrState rr_ul_;
    double tti_s_ = 0.001;
};

void Simulator::validate() const {
    if (cfg_.num_clients <= 0) throw ValidationError("num_clients must be positive");
    if (cfg_.dl_rbs <= 0 || cfg_.ul_rbs <= 0) throw ValidationError("RB counts must be positive");
    if (cfg_.duration_ttis <= 0) throw ValidationError("duration_ttis must be positive");
    if (cfg_.mean_cqi.empty()) throw ValidationError("mean_cqi must list at least one value");
    for (int c : cfg_.mean_cqi)
        if (c < 1 || c > 15) throw ValidationError("mean_cqi values must lie in [1,15]");
    if (cfg_.sequences.empty()) throw ValidationError("sequences must list at least one name");
    if (cfg_.loss_prob < 0.0 || cfg_.loss_prob >= 1.0)
        throw ValidationError("loss_prob must lie in [0,1)");
    if (cfg_.air_latency_ttis < 1) throw ValidationError("air_latency_ttis must be at least 1");
    if (cfg_.rate_sample_ttis <= 0) throw ValidationError("rate_sample_ttis must be positive");
    if (cfg_.apd_period_ttis <= 0) throw ValidationError("apd_period_ttis must be positive");
    if (cfg_.buffer_target_segments < 1) throw ValidationError("buffer_target_segments must be at least 1");
    if (cfg_.startup_segments < 1) throw ValidationError("startup_segments must be at least 1");
    if (cfg_.ema_horizon_ttis < 1.0) throw ValidationError("ema_horizon_ttis must be at least 1");
    if (cfg_.ack_sample_window < 1 || cfg_.history_window < 1)
        throw ValidationError("feedback windows must be at least 1");
    if (cfg_.mac_discard_ttis < 0) throw ValidationError("mac_discard_ttis must be non-negative");
}

void Simulator::setup() {
    tti_s_ = cfg_.proto.tti_seconds;
    std::uint64_t state = cfg_.seed;
    const std::uint64_t dl_seed = splitmix64(state);
    const std::uint64_t ul_seed = splitmix64(state);
    const std::uint64_t loss_seed = splitmix64(state);
    const std::uint64_t trace_base = splitmix64(state);
    loss_rng_ = Rng(loss_seed);

    ChannelConfig ch;
    ch.num_clients = cfg_.num_clients;
    ch.stay_prob = cfg_.stay_prob;
    ch.mean_cqi.resize(static_cast<size_t>(cfg_.num_clients));
    for (int k = 0; k < cfg_.num_clients; ++k)
        ch.mean_cqi[static_cast<size_t>(k)] = cfg_.mean_cqi[static_cast<size_t>(k) % cfg_.mean_cqi.size()];
    ch.num_rbs = cfg_.dl_rbs;
    dl_channel_ = std::make_unique<ChannelProcess>(ch, dl_seed);
    ch.num_rbs = cfg_.ul_rbs;
    ul_channel_ = std::make_unique<ChannelProcess>(ch, ul_seed);

    sessions_.clear();
    sessions_.reserve(static_cast<size_t>(cfg_.num_clients));
    for (int k = 0; k < cfg_.num_clients; ++k) {
        Session s(cfg_.tcp);
        s.id = k;
        const std::string& name = cfg_.sequences[static_cast<size_t>(k) % cfg_.sequences.size()];
        s.video = generate_trace(profile_by_name(name), trace_base + static_cast<std::uint64_t>(k));
        s.total_segments = static_cast<int>(s.video.segments.size());
        s.total_frames = static_cast<long>(s.total_segments) * kFramesPerSegmentEngine;
        s.frame_remaining.assign(static_cast<size_t>(s.total_frames), 0);
        sessions_.push_back(std::move(s));
    }
}

double Simulator::row_mean_cqi(const CqiGrid& grid, int k) const {
    double sum = 0.0;
    for (int n = 0; n < grid.num_rbs; ++n) sum += grid.at(k, n);
    return sum / grid.num_rbs;
}

int Simulator::rb_bytes_now(const CqiGrid& grid, int k) const {
    int cqi = static_cast<int>(std::llround(row_mean_cqi(grid, k)));
    cqi = std::clamp(cqi, 1, 15);
    return mcs::rb_capacity(mcs::max_mcs_for_cqi(cqi));
}

MacPacket Simulator::make_mac_packet(long long seq, long long payload, double tcp_send_time,
                                     bool retx, int rb_bytes, double now) const {
    const double ip_bytes = static_cast<double>(payload) + cfg_.proto.tcp_header +
                            cfg_.proto.ip_header + cfg_.proto.pdcp_header;
    int nb = static_cast<int>(std::ceil(ip_bytes / rb_bytes));
    nb = std::max(1, nb);
    MacPacket mp;
    mp.seq = seq;
    mp.payload = payload;
    mp.subpackets = nb;
    mp.mac_bytes = static_cast<long long>(
        std::llround(ip_bytes + nb * (cfg_.proto.rlc_header + cfg_.proto.mac_header)));
    mp.remaining = mp.mac_bytes;
    mp.enqueue_time = now;
    mp.tcp_send_time = tcp_send_time;
    mp.retransmit = retx;
    return mp;
}

void Simulator::enqueue_retransmit(Session& s, MacPacket mp) {
    auto pos = s.mac_queue.begin();
    if (!s.mac_queue.empty() && s.mac_queue.front().remaining < s.mac_queue.front().mac_bytes)
        ++pos;
    s.mac_bytes += mp.mac_bytes;
    s.payload_in_mac += mp.payload;
    s.mac_queue.insert(pos, std::move(mp));
}

void Simulator::process_arrivals(Session& s, long t, double now) {
    while (!s.dl_air.empty() && s.dl_air.front().tti <= t) {
        DlArrival ev = s.dl_air.front();
        s.dl_air.pop_front();
        if (ev.lost) continue;
        if (ev.seq + ev.payload > s.recv_prefix)
            add_interval(s.ooo, std::max(ev.seq, s.recv_prefix), ev.seq + ev.payload);
        while (!s.ooo.empty() && s.ooo.front().lo <= s.recv_prefix) {
            s.recv_prefix = std::max(s.recv_prefix, s.ooo.front().hi);
            s.ooo.erase(s.ooo.begin());
        }
        while (!s.spans.empty() && s.spans.front().start + s.spans.front().len <= s.recv_prefix) {
            if (s.spans.front().last_chunk) {
                int& rem = s.frame_remaining[static_cast<size_t>(s.spans.front().frame)];
                if (rem > 0) --rem;
            }
            s.spans.pop_front();
        }
        UlAckRecord ack;
        ack.created = now;
        ack.tcp_send_time = ev.tcp_send_time;
        ack.depart_time = ev.depart_time;
        ack.ack_no = s.recv_prefix;
        ack.size_bytes = cfg_.proto.ack_bytes;
        s.ul_acks.push_back(ack);
    }
}

void Simulator::process_ack_arrivals(Session& s, long t, double now) {
    while (!s.ul_air.empty() && s.ul_air.front().tti <= t) {
        AckInFlight af = s.ul_air.front();
        s.ul_air.pop_front();
        s.ack_samples.push_back({af.data_depart_time, now});
        while (s.ack_samples.size() > static_cast<size_t>(cfg_.ack_sample_window))
            s.ack_samples.pop_front();
        s.flow.on_ack(af.ack_no, now);
    }
}

void Simulator::check_timeout(Session& s, double now) {
    if (s.flow.has_flight() && now >= s.flow.timer_expiry()) {
        s.flow.on_timeout(now);
        ++s.timeouts;
    }
}

void Simulator::request_segments(Session& s, double now) {
    if (s.next_segment >= s.total_segments) return;
    const long segments_played = s.frames_played / kFramesPerSegmentEngine;
    if (s.next_segment - segments_played >= cfg_.buffer_target_segments) return;
    const auto& seg = s.video.segments[static_cast<size_t>(s.next_segment)];
    for (const VideoPacket& p : seg) {
        VideoPacket q = p;
        q.client_id = s.id;
        s.vq_bytes += q.size_bytes;
        s.generated_bytes += q.size_bytes;
        s.total_importance += q.importance;
        ++s.frame_remaining[static_cast<size_t>(global_frame(q))];
        s.vq.push_back(std::move(q));
    }
    ++s.next_segment;
    s.frames_admitted = static_cast<long>(s.next_segment) * kFramesPerSegmentEngine;
    // Pre-start queues have no drain deadline yet, so drops wait for playback.
    if (cfg_.apd_enabled && s.have_rate && s.started) run_drop_pass(s, now);
}

void Simulator::run_drop_pass(Session& s, double /*now*/) {
    // The partially packaged head (if any) is pinned: already in the stream.
    const size_t first = (s.head_consumed > 0 && !s.vq.empty()) ? 1 : 0;
    if (s.vq.size() <= first) return;

    QueueSnapshot snap;
    snap.s_mac = s.mac_bytes;
    // Packaging hands bytes straight to the MAC queue, so no data ever sits
    // between the send window and the MAC; in-flight bytes already left.
    snap.s_send = 0;
    snap.s_vq = 0;
    for (size_t i = first; i < s.vq.size(); ++i) snap.s_vq += s.vq[i].size_bytes;
    snap.t_k = static_cast<double>(std::max<long>(0, s.ready_upto - s.frames_played)) / s.video.fps;
    snap.recent_rates = s.rate_samples;
    snap.last_rate = s.last_rate;

    const double tr = estimate_rate(snap.recent_rates, snap.last_rate, cfg_.apd);
    const DropBudget budget = drop_budget(tr, snap, cfg_.apd);
    if (budget.s_drop <= 0.0) return;

    std::vector<DropItem> items;
    items.reserve(s.vq.size() - first);
    for (size_t i = first; i < s.vq.size(); ++i)
        items.push_back({s.vq[i].importance, s.vq[i].size_bytes});
    const DropPlan plan = select_drop_set(items, budget.s_drop);

    std::deque<VideoPacket> kept;
    for (size_t i = 0; i < s.vq.size(); ++i) {
        const bool dropped = i >= first && plan.drop[i - first] != 0;
        if (!dropped) {
            kept.push_back(std::move(s.vq[i]));
            continue;
        }
        const VideoPacket& p = s.vq[i];
        s.vq_bytes -= p.size_bytes;
        ++s.drops.dropped_packets;
        s.drops.dropped_bytes += p.size_bytes;
        s.drops.dropped_importance += p.importance;
        int& rem = s.frame_remaining[static_cast<size_t>(global_frame(p))];
        if (rem > 0) --rem;
    }
    s.vq.swap(kept);
}

void Simulator::package_tcp(Session& s, const CqiGrid& dl, double now) {
    const int rb_bytes = rb_bytes_now(dl, s.id);
    for (TcpSegment& seg : s.flow.take_retransmissions()) {
        enqueue_retransmit(s, make_mac_packet(seg.seq, seg.size, seg.send_time, true, rb_bytes, now));
        ++s.retransmitted_packets;
    }
    while (s.vq_bytes > 0) {
        const long long size = std::min<long long>(s.flow.config().mss, s.vq_bytes);
        if (s.flow.can_send() < size) break;
        const long long seq = s.flow.next_seq();
        // Attribute the packaged bytes to the video packets they came from.
        long long left = size;
        long long offset = s.stream_packaged;
        while (left > 0) {
            VideoPacket& p = s.vq.front();
            const long long rem = p.size_bytes - s.head_consumed;
            const long long take = std::min(rem, left);
            StreamSpan span;
            span.start = offset;
            span.len = take;
            span.frame = global_frame(p);
            span.last_chunk = (take == rem);
            s.spans.push_back(span);
            s.head_consumed += take;
            s.vq_bytes -= take;
            offset += take;
            left -= take;
            if (s.head_consumed == p.size_bytes) {
                s.vq.pop_front();
                s.head_consumed = 0;
            }
        }
        s.stream_packaged += size;
        s.flow.on_send(size, now);
        MacPacket mp = make_mac_packet(seq, size, now, false, rb_bytes, now);
        s.mac_bytes += mp.mac_bytes;
        s.payload_in_mac += mp.payload;
        s.mac_queue.push_back(std::move(mp));
    }
}

std::vector<double> Simulator::downlink_requirements(const CqiGrid& dl, long t) const {
    std::vector<double> req(static_cast<size_t>(cfg_.num_clients), 0.0);
    for (int k = 0; k < cfg_.num_clients; ++k) {
        const Session& s = sessions_[static_cast<size_t>(k)];
        const int rb_bytes = rb_bytes_now(dl, k);
        const double full_ip = cfg_.proto.packet_bytes();
        const int nb_now = std::max(1, static_cast<int>(std::ceil(full_ip / rb_bytes)));
        if (t < cfg_.cold_start_ttis) {
            // No feedback exists yet: ask for one full packet's MAC bytes per TTI.
            req[static_cast<size_t>(k)] =
                full_ip + nb_now * (cfg_.proto.rlc_header + cfg_.proto.mac_header);
            continue;
        }
        const std::vector<AckSample> window(s.ack_samples.begin(), s.ack_samples.end());
        const auto rate = ack_feedback_rate(window, cfg_.proto.ack_bytes);
        if (!rate) continue; // no feedback: no requirement this TTI
        double nb_mean = nb_now;
        if (!s.nb_history.empty()) {
            double sum = 0.0;
            for (int v : s.nb_history) sum += v;
            nb_mean = sum / static_cast<double>(s.nb_history.size());
        }
        double cqi_hist = row_mean_cqi(dl, k);
        if (!s.cqi_history.empty()) {
            double sum = 0.0;
            for (double v : s.cqi_history) sum += v;
            cqi_hist = sum / static_cast<double>(s.cqi_history.size());
        }
        const int nb = estimate_subpackets(nb_mean, cqi_hist, row_mean_cqi(dl, k));
        req[static_cast<size_t>(k)] = capacity_requirement(*rate, cfg_.proto, nb);
    }
    return req;
}

Allocation Simulator::schedule_downlink(const CqiGrid& dl, long t, double now) {
    std::vector<long long> queues(static_cast<size_t>(cfg_.num_clients), 0);
    std::vector<double> hol(static_cast<size_t>(cfg_.num_clients), 0.0);
    std::vector<double> ema(static_cast<size_t>(cfg_.num_clients), 0.0);
    for (int k = 0; k < cfg_.num_clients; ++k) {
        const Session& s = sessions_[static_cast<size_t>(k)];
        queues[static_cast<size_t>(k)] = s.mac_bytes;
        if (!s.mac_queue.empty()) hol[static_cast<size_t>(k)] = now - s.mac_queue.front().enqueue_time;
        ema[static_cast<size_t>(k)] = s.dl_ema;
    }
    switch (cfg_.dl_sched) {
    case DlSched::kTd: {
        const std::vector<double> req = downlink_requirements(dl, t);
        return td_allocate(dl, req, queues);
    }
    case DlSched::kMaxci:
        return maxci_allocate(dl, queues);
    case DlSched::kPf:
        return pf_allocate(dl, queues, ema);
    case DlSched::kRr:
        return rr_allocate(dl, queues, rr_dl_);
    case DlSched::kMlwdf:
        return mlwdf_allocate(dl, queues, hol, ema, cfg_.mlwdf);
    }
    throw ValidationError("unknown downlink scheduler");
}

void Simulator::expire_mac_queue(Session& s, double now) {
    // Queued packets whose wait exceeds the discard bound are lost before
    // transmission; the sender recovers them through duplicate ACKs or RTO.
    // A partially transmitted head is already on the air and is spared.
    const double bound = cfg_.mac_discard_ttis * tti_s_;
    while (!s.mac_queue.empty()) {
        const MacPacket& f = s.mac_queue.front();
        if (f.remaining != f.mac_bytes || now - f.enqueue_time <= bound) break;
        s.mac_bytes -= f.mac_bytes;
        s.payload_in_mac -= f.payload;
        ++s.mac_expired;
        s.mac_queue.pop_front();
    }
}

void Simulator::transmit_downlink(Session& s, long long budget, long t, double now) {
    while (budget > 0 && !s.mac_queue.empty()) {
        MacPacket& f = s.mac_queue.front();
        const long long d = std::min(budget, f.remaining);
        f.remaining -= d;
        budget -= d;
        s.mac_bytes -= d;
        s.mac_delivered += d;
        s.tti_dl_bytes += d;
        if (f.remaining == 0) {
            DlArrival ev;
            ev.tti = t + cfg_.air_latency_ttis;
            ev.seq = f.seq;
            ev.payload = f.payload;
            ev.tcp_send_time = f.tcp_send_time;
            ev.depart_time = now;
            ev.lost = cfg_.loss_prob > 0.0 && loss_rng_.next_double() < cfg_.loss_prob;
            s.dl_air.push_back(ev);
            s.nb_history.push_back(f.subpackets);
            while (s.nb_history.size() > static_cast<size_t>(cfg_.history_window))
                s.nb_history.pop_front();
            s.payload_in_mac -= f.payload;
            s.mac_queue.pop_front();
        }
    }
}

Allocation Simulator::schedule_uplink(const CqiGrid& ul, double now) {
    const int K = cfg_.num_clients;
    std::vector<long long> queues(static_cast<size_t>(K), 0);
    std::vector<double> hol(static_cast<size_t>(K), 0.0);
    std::vector<double> ema(static_cast<size_t>(K), 0.0);
    long long total_events = 0;
    for (const Session& s : sessions_) total_events += s.rebuffer_events;
    std::vector<UplinkClient> clients(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) {
        const Session& s = sessions_[static_cast<size_t>(k)];
        UplinkClient& c = clients[static_cast<size_t>(k)];
        c.acks.reserve(s.ul_acks.size());
        int idx = 1;
        long long bytes = 0;
        for (const UlAckRecord& a : s.ul_acks) {
            PendingAck pa;
            pa.client = k;
            pa.index = idx++;
            pa.size_bytes = a.size_bytes;
            pa.ts = a.tcp_send_time;
            c.acks.push_back(pa);
            bytes += static_cast<long long>(a.size_bytes);
        }
        c.rto = s.flow.rto();
        c.cwnd = s.flow.cwnd();
        c.ssthresh = s.flow.ssthresh();
        c.eta = static_cast<double>(s.rebuffer_events + 1) / static_cast<double>(total_events + K);
        queues[static_cast<size_t>(k)] = bytes;
        if (!s.ul_acks.empty()) hol[static_cast<size_t>(k)] = now - s.ul_acks.front().created;
        ema[static_cast<size_t>(k)] = s.ul_ema;
    }
    switch (cfg_.ul_sched) {
    case UlSched::kTu:
        return tu_allocate(ul, clients, cfg_.uplink, now);
    case UlSched::kMaxci:
        return maxci_allocate(ul, queues);
    case UlSched::kPf:
        return pf_allocate(ul, queues, ema);
    case UlSched::kRr:
        return rr_allocate(ul, queues, rr_ul_);
    case UlSched::kMlwdf:
        return mlwdf_allocate(ul, queues, hol, ema, cfg_.mlwdf);
    }
    throw ValidationError("unknown uplink scheduler");
}

int Simulator::transmit_uplink(Session& s, long long budget, long t) {
    if (budget <= 0 || s.ul_acks.empty()) return 0;
    std::vector<double> sizes;
    sizes.reserve(s.ul_acks.size());
    for (const UlAckRecord& a : s.ul_acks) sizes.push_back(a.size_bytes);
    const int z = scheduled_count(sizes, budget).count;
    for (int i = 0; i < z; ++i) {
        const UlAckRecord& a = s.ul_acks.front();
        AckInFlight af;
        af.tti = t + cfg_.air_latency_ttis;
        af.ack_no = a.ack_no;
        af.data_depart_time = a.depart_time;
        s.ul_air.push_back(af);
        s.tti_ul_bytes += static_cast<long long>(a.size_bytes);
        s.ul_acks.pop_front();
    }
    return z;
}

void Simulator::advance_playback(Session& s) {
    while (s.ready_upto < s.frames_admitted &&
           s.frame_remaining[static_cast<size_t>(s.ready_upto)] == 0)
        ++s.ready_upto;

    if (!s.started) {
        if (s.ready_upto >= static_cast<long>(cfg_.startup_segments) * kFramesPerSegmentEngine)
            s.started = true;
        else
            return;
    }
    if (s.frames_played >= s.total_frames) return;

    const double frame_dur = 1.0 / s.video.fps;
    s.play_accum += tti_s_;
    while (s.play_accum >= frame_dur && s.frames_played < s.total_frames &&
           s.frames_played < s.ready_upto) {
        s.play_accum -= frame_dur;
        ++s.frames_played;
        s.stalled = false;
    }
    if (s.play_accum >= frame_dur && s.frames_played < s.total_frames) {
        if (!s.stalled) {
            s.stalled = true;
            ++s.rebuffer_events;
        }
        s.rebuffer_seconds += tti_s_;
        s.play_accum = frame_dur;
    }
}

void Simulator::sample_rates_and_emas(long t) {
    const double horizon = cfg_.ema_horizon_ttis;
    for (Session& s : sessions_) {
        s.dl_ema += (static_cast<double>(s.tti_dl_bytes) / tti_s_ - s.dl_ema) / horizon;
        s.ul_ema += (static_cast<double>(s.tti_ul_bytes) / tti_s_ - s.ul_ema) / horizon;
        // Sustainable-rate samples count only saturated TTIs: the MAC queue
        // still held data after transmit, so the bytes moved equal the whole
        // capacity granted. Idle or fully drained TTIs would read as demand,
        // not capacity, and talk the drop budget into starving the queue.
        if (!s.mac_queue.empty()) {
            ++s.busy_ttis_window;
            s.busy_delivered_window += s.tti_dl_bytes;
        }
        s.tti_dl_bytes = 0;
        s.tti_ul_bytes = 0;
        if ((t + 1) % cfg_.rate_sample_ttis == 0) {
            if (s.busy_ttis_window > 0) {
                const double rate =
                    static_cast<double>(s.busy_delivered_window) / (s.busy_ttis_window * tti_s_);
                s.rate_samples.push_back(rate);
                if (s.rate_samples.size() > static_cast<size_t>(cfg_.apd.history_window))
                    s.rate_samples.erase(s.rate_samples.begin());
                s.last_rate = rate;
                s.have_rate = true;
            }
            s.busy_ttis_window = 0;
            s.busy_delivered_window = 0;
        }
    }
}

void Simulator::emit_rows(long t) {
    if (sinks_.tcp_trace) {
        for (const Session& s : sessions_)
            *sinks_.tcp_trace << t << ',' << s.id << ',' << std::llround(s.flow.cwnd()) << ','
                              << std::llround(s.flow.ssthresh()) << '\n';
    }
    if (sinks_.metrics && (t + 1) % cfg_.rate_sample_ttis == 0) {
        for (const Session& s : sessions_) {
            const double mac_kbps = s.last_rate * 8.0 / 1000.0;
            const double buffer_s =
                static_cast<double>(std::max<long>(0, s.ready_upto - s.frames_played)) / s.video.fps;
            *sinks_.metrics << "mac_kbps," << t << ',' << s.id << ',' << mac_kbps << '\n';
            *sinks_.metrics << "buffer_seconds," << t << ',' << s.id << ',' << buffer_s << '\n';
            *sinks_.metrics << "cwnd_bytes," << t << ',' << s.id << ',' << std::llround(s.flow.cwnd())
                            << '\n';
        }
    }
}

MetricsReport Simulator::finalize() const {
    MetricsReport rep;
    rep.seed = cfg_.seed;
    rep.duration_seconds = cfg_.duration_ttis * tti_s_;
    rep.dl_sched = to_string(cfg_.dl_sched);
    rep.ul_sched = to_string(cfg_.ul_sched);
    rep.apd_enabled = cfg_.apd_enabled;
    rep.bytes_conserved = true;
    double qr_sum = 0.0;
    double psnr_sum = 0.0;
    for (const Session& s : sessions_) {
        ClientReport c;
        c.id = s.id;
        c.sequence = s.video.name;
        c.delivered_bytes = s.recv_prefix;
        c.generated_bytes = s.generated_bytes;
        c.dropped_packets = s.drops.dropped_packets;
        c.dropped_bytes = s.drops.dropped_bytes;
        c.dropped_importance = s.drops.dropped_importance;
        c.total_importance = s.total_importance;
        c.throughput_kbps = static_cast<double>(c.delivered_bytes) * 8.0 / 1000.0 / rep.duration_seconds;
        c.quality_retention =
            s.total_importance > 0.0 ? 1.0 - s.drops.dropped_importance / s.total_importance : 1.0;
        c.base_psnr_db = base_psnr_for(s.video.name);
        c.est_psnr_db = estimate_psnr(c.base_psnr_db, c.quality_retention);
        c.rebuffer_events = s.rebuffer_events;
        c.rebuffer_seconds = s.rebuffer_seconds;
        c.startup_seconds = s.started ? (s.startup_tti >= 0 ? (s.startup_tti + 1) * tti_s_ : -1.0) : -1.0;
        c.frames_played = s.frames_played;
        c.timeouts = s.timeouts;
        c.retransmitted_packets = s.retransmitted_packets;
        c.mac_expired_packets = s.mac_expired;
        rep.system_throughput_kbps += c.throughput_kbps;
        rep.total_rebuffer_seconds += c.rebuffer_seconds;
        rep.total_rebuffer_events += c.rebuffer_events;
        qr_sum += c.quality_retention;
        psnr_sum += c.est_psnr_db;

        // Every admitted byte is accounted for exactly once.
        const long long packaged_plus_queued = s.stream_packaged + s.vq_bytes;
        if (s.generated_bytes != s.drops.dropped_bytes + packaged_plus_queued)
            rep.bytes_conserved = false;
        if (s.recv_prefix > s.stream_packaged) rep.bytes_conserved = false;

        rep.clients.push_back(std::move(c));
    }
    if (!sessions_.empty()) {
        rep.mean_quality_retention = qr_sum / static_cast<double>(sessions_.size());
        rep.mean_est_psnr_db = psnr_sum / static_cast<double>(sessions_.size());
    }
    return rep;
}

MetricsReport Simulator::run() {
    setup();
    for (long t = 0; t < cfg_.duration_ttis; ++t) {
        const double now = t * tti_s_;
        const CqiGrid& dl = dl_channel_->step();
        const CqiGrid& ul = ul_channel_->step();

        for (Session& s : sessions_) {
            double sum = row_mean_cqi(dl, s.id);
            s.cqi_history.push_back(sum);
            while (s.cqi_history.size() > static_cast<size_t>(cfg_.history_window))
                s.cqi_history.pop_front();
        }

        for (Session& s : sessions_) process_arrivals(s, t, now);
        for (Session& s : sessions_) process_ack_arrivals(s, t, now);
        for (Session& s : sessions_) check_timeout(s, now);
        for (Session& s : sessions_) request_segments(s, now);
        if (cfg_.apd_enabled && t > 0 && t % cfg_.apd_period_ttis == 0)
            for (Session& s : sessions_)
                if (s.have_rate && s.started) run_drop_pass(s, now);
        for (Session& s : sessions_) package_tcp(s, dl, now);
        if (cfg_.mac_discard_ttis > 0)
            for (Session& s : sessions_) expire_mac_queue(s, now);

        const Allocation dl_alloc = schedule_downlink(dl, t, now);
        for (Session& s : sessions_)
            transmit_downlink(s, dl_alloc.capacity_bytes[static_cast<size_t>(s.id)], t, now);
        if (sinks_.metrics) {
            for (int k = 0; k < cfg_.num_clients; ++k) {
                const auto& rbs = dl_alloc.rb_sets[static_cast<size_t>(k)];
                if (rbs.empty()) continue;
                *sinks_.metrics << "dl_rbs," << t << ',' << k << ',' << rbs.size() << '\n'
                                << "dl_mcs," << t << ',' << k << ','
                                << dl_alloc.mcs_level[static_cast<size_t>(k)] << '\n'
                                << "dl_bytes," << t << ',' << k << ','
                                << dl_alloc.capacity_bytes[static_cast<size_t>(k)] << '\n';
            }
        }

        const Allocation ul_alloc = schedule_uplink(ul, now);
        for (Session& s : sessions_) {
            const long long ul_before = s.tti_ul_bytes;
            const int acks_sent =
                transmit_uplink(s, ul_alloc.capacity_bytes[static_cast<size_t>(s.id)], t);
            const auto& rbs = ul_alloc.rb_sets[static_cast<size_t>(s.id)];
            if (sinks_.metrics && !rbs.empty()) {
                *sinks_.metrics << "ul_rbs," << t << ',' << s.id << ',' << rbs.size() << '\n'
                                << "ul_acks," << t << ',' << s.id << ',' << acks_sent << '\n'
                                << "ul_bytes," << t << ',' << s.id << ','
                                << (s.tti_ul_bytes - ul_before) << '\n';
            }
        }

        for (Session& s : sessions_) {
            const bool was_started = s.started;
            advance_playback(s);
            if (!was_started && s.started) s.startup_tti = t;
        }
        sample_rates_and_emas(t);
        emit_rows(t);

        if (sinks_.log_level >= 1 && (t + 1) % 1000 == 0) {
            long long mac_total = 0;
            for (const Session& s : sessions_) mac_total += s.mac_delivered;
            std::cerr << "tti=" << (t + 1) << " mac_delivered_bytes=" << mac_total << '\n';
        }
    }
    return finalize();
}

} // namespace

const char* to_string(DlSched s) {
    switch (s) {
    case DlSched::kTd: return "td";
    case DlSched::kMaxci: return "maxci";
    case DlSched::kPf: return "pf";
    case DlSched::kRr: return "rr";
    case DlSched::kMlwdf: return "mlwdf";
    }
    return "?";
}

const char* to_string(UlSched s) {
    switch (s) {
    case UlSched::kTu: return "tu";
    case UlSched::kMaxci: return "maxci";
    case UlSched::kPf: return "pf";
    case UlSched::kRr: return "rr";
    case UlSched::kMlwdf: return "mlwdf";
    }
    return "?";
}

double estimate_psnr(double base_psnr_db, double quality_retention) {
    const double qr = std::clamp(quality_retention, 0.0, 1.0);
    return base_psnr_db * (1.0 - 0.15 * (1.0 - qr));
}

double base_psnr_for(const std::string& sequence_name) {
    std::string stem = sequence_name;
    const std::string suffix = ".cif";
    if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
        stem.erase(stem.size() - suffix.size());
    if (stem == "news") return 38.97;
    if (stem == "highway") return 38.50;
    if (stem == "crew") return 37.49;
    if (stem == "foreman") return 37.03;
    return 37.0;
}

MetricsReport run_simulation(const SimConfig& cfg, const RunSinks& sinks) {
    Simulator sim(cfg, sinks);
    return sim.run();
}

} // namespace crosslayer
