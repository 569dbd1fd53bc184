// Simplified NewReno-style TCP sender state: byte-counted windows, Jacobson
// RTO, fast retransmit on the third duplicate ACK, timeout backoff.
#pragma once

#include <cstdint>
#include <vector>

namespace crosslayer {

struct TcpConfig {
    long long mss = 1460;            // payload bytes per segment
    int initial_window_segments = 2; // IW
    long long initial_ssthresh = 65535;
    double rto_init = 0.5;
    double rto_min = 0.2;
    double rto_max = 4.0;
};

enum class TcpMode { kSlowStart, kCongestionAvoidance, kRecovery };

struct TcpSegment {
    long long seq = 0;
    long long size = 0;
    double send_time = 0.0;
    bool retransmitted = false;
};

struct TcpSnapshot {
    double cwnd = 0.0;
    double ssthresh = 0.0;
    double rto = 0.0;
    std::vector<double> send_times; // of in-flight segments, oldest first
};

struct AckResult {
    long long newly_acked = 0;
    bool duplicate = false;
    bool rtt_sampled = false;
};

class TcpFlow {
public:
    explicit TcpFlow(const TcpConfig& cfg = {});

    // Window room in bytes: max(0, cwnd - in_flight).
    long long can_send() const;

    // Register a freshly sent segment of `size` payload bytes.
    void on_send(long long size, double now);

    // Cumulative ACK up to (not including) byte `ack_seq`.
    AckResult on_ack(long long ack_seq, double now);

    // Retransmission timeout: collapse the window, back off the timer, and
    // queue the oldest unacked segment for retransmission.
    void on_timeout(double now);

    TcpSnapshot extract_state() const;

    long long in_flight_bytes() const { return flight_bytes_; }
    bool has_flight() const { return !flight_.empty(); }
    long long next_seq() const { return next_seq_; }
    double rto() const { return rto_; }
    double cwnd() const { return cwnd_; }
    double ssthresh() const { return ssthresh_; }
    TcpMode mode() const { return mode_; }
    int dup_ack_count() const { return dup_acks_; }
    double timer_expiry() const { return timer_expiry_; } // +inf when idle
    const TcpConfig& config() const { return cfg_; }
    const std::vector<TcpSegment>& in_flight() const { return flight_; }

    // Segments queued for retransmission by timeouts/fast retransmit; the
    // caller re-enqueues them at MAC and this list is cleared.
    std::vector<TcpSegment> take_retransmissions();

private:
    void sample_rtt(double r);
    void restart_timer(double now);

    TcpConfig cfg_;
    double cwnd_;
    double ssthresh_;
    double srtt_ = 0.0;
    double rttvar_ = 0.0;
    bool have_rtt_ = false;
    double rto_;
    TcpMode mode_ = TcpMode::kSlowStart;
    int dup_acks_ = 0;
    long long next_seq_ = 0;
    long long flight_bytes_ = 0;
    std::vector<TcpSegment> flight_; // sorted by seq
    std::vector<TcpSegment> retransmit_queue_;
    double timer_expiry_;
};

} // namespace crosslayer
