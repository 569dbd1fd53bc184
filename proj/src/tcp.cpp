#include "crosslayer/tcp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crosslayer/errors.hpp"

namespace crosslayer {

TcpFlow::TcpFlow(const TcpConfig& cfg)
    : cfg_(cfg),
      cwnd_(static_cast<double>(cfg.mss * cfg.initial_window_segments)),
      ssthresh_(static_cast<double>(cfg.initial_ssthresh)),
      rto_(cfg.rto_init),
      timer_expiry_(std::numeric_limits<double>::infinity()) {}

long long TcpFlow::can_send() const {
    const long long room = static_cast<long long>(cwnd_) - flight_bytes_;
    return std::max<long long>(0, room);
}

void TcpFlow::on_send(long long size, double now) {
    if (size <= 0) throw ValidationError("tcp on_send: non-positive segment size");
    TcpSegment seg;
    seg.seq = next_seq_;
    seg.size = size;
    seg.send_time = now;
    next_seq_ += size;
    flight_bytes_ += size;
    flight_.push_back(seg);
    if (!std::isfinite(timer_expiry_)) restart_timer(now);
}

void TcpFlow::sample_rtt(double r) {
    if (!have_rtt_) {
        srtt_ = r;
        rttvar_ = r / 2.0;
        have_rtt_ = true;
    } else {
        rttvar_ = 0.75 * rttvar_ + 0.25 * std::abs(srtt_ - r);
        srtt_ = 0.875 * srtt_ + 0.125 * r;
    }
    rto_ = std::clamp(srtt_ + 4.0 * rttvar_, cfg_.rto_min, cfg_.rto_max);
}

void TcpFlow::restart_timer(double now) {
    timer_expiry_ = now + rto_;
}

AckResult TcpFlow::on_ack(long long ack_seq, double now) {
    AckResult res;
    if (ack_seq > next_seq_)
        throw ValidationError("tcp on_ack: ack beyond sent data");

    const long long snd_una = flight_.empty() ? next_seq_ : flight_.front().seq;
    if (ack_seq < snd_una) return res; // stale, predates the current window

    if (ack_seq == snd_una) {
        if (flight_.empty()) return res; // nothing outstanding, pure no-op
        res.duplicate = true;
        ++dup_acks_;
        if (dup_acks_ == 3 && mode_ != TcpMode::kRecovery) {
            ssthresh_ = std::max(static_cast<double>(flight_bytes_) / 2.0,
                                 static_cast<double>(2 * cfg_.mss));
            cwnd_ = ssthresh_;
            mode_ = TcpMode::kRecovery;
            TcpSegment seg = flight_.front();
            seg.retransmitted = true;
            flight_.front().retransmitted = true;
            flight_.front().send_time = now;
            retransmit_queue_.push_back(seg);
        }
        return res;
    }

    // New data acknowledged.
    size_t drop = 0;
    const TcpSegment* newest = nullptr;
    while (drop < flight_.size() && flight_[drop].seq + flight_[drop].size <= ack_seq) {
        newest = &flight_[drop];
        res.newly_acked += flight_[drop].size;
        ++drop;
    }
    if (newest && !newest->retransmitted) {
        sample_rtt(now - newest->send_time);
        res.rtt_sampled = true;
    }
    flight_.erase(flight_.begin(), flight_.begin() + drop);
    flight_bytes_ -= res.newly_acked;
    dup_acks_ = 0;
    if (mode_ == TcpMode::kRecovery) mode_ = TcpMode::kCongestionAvoidance;

    if (mode_ == TcpMode::kSlowStart) {
        cwnd_ += static_cast<double>(res.newly_acked);
        if (cwnd_ >= ssthresh_) mode_ = TcpMode::kCongestionAvoidance;
    } else {
        const double mss = static_cast<double>(cfg_.mss);
        for (long long left = res.newly_acked; left >= cfg_.mss; left -= cfg_.mss)
            cwnd_ += mss * mss / cwnd_;
    }

    if (flight_.empty())
        timer_expiry_ = std::numeric_limits<double>::infinity();
    else
        restart_timer(now);
    return res;
}

void TcpFlow::on_timeout(double now) {
    if (flight_.empty()) return;
    ssthresh_ = std::max(static_cast<double>(flight_bytes_) / 2.0,
                         static_cast<double>(2 * cfg_.mss));
    cwnd_ = static_cast<double>(cfg_.mss);
    mode_ = TcpMode::kSlowStart;
    dup_acks_ = 0;
    rto_ = std::min(rto_ * 2.0, cfg_.rto_max);

    TcpSegment seg = flight_.front();
    seg.retransmitted = true;
    flight_.front().retransmitted = true;
    flight_.front().send_time = now;
    retransmit_queue_.push_back(seg);
    restart_timer(now);
}

TcpSnapshot TcpFlow::extract_state() const {
    TcpSnapshot snap;
    snap.cwnd = cwnd_;
    snap.ssthresh = ssthresh_;
    snap.rto = rto_;
    snap.send_times.reserve(flight_.size());
    for (const auto& seg : flight_) snap.send_times.push_back(seg.send_time);
    return snap;
}

std::vector<TcpSegment> TcpFlow::take_retransmissions() {
    std::vector<TcpSegment> out;
    out.swap(retransmit_queue_);
    return out;
}

} // namespace crosslayer
