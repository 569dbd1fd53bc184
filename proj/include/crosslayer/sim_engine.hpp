// Event loop tying the pieces together: per-TTI channel evolution, segment
// requests, packet drop, TCP packaging, downlink/uplink scheduling, delayed
// deliveries, acknowledgment feedback, playback, and metrics.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "crosslayer/apd.hpp"
#include "crosslayer/baselines.hpp"
#include "crosslayer/mac_downlink.hpp"
#include "crosslayer/mac_uplink.hpp"
#include "crosslayer/tcp.hpp"
#include "crosslayer/video_trace.hpp"

namespace crosslayer {

enum class DlSched { kTd, kMaxci, kPf, kRr, kMlwdf };
enum class UlSched { kTu, kMaxci, kPf, kRr, kMlwdf };

const char* to_string(DlSched s);
const char* to_string(UlSched s);

struct SimConfig {
    int num_clients = 8;
    int dl_rbs = 16;
    int ul_rbs = 8;
    long duration_ttis = 16000;
    std::uint64_t seed = 1;
    DlSched dl_sched = DlSched::kTd;
    UlSched ul_sched = UlSched::kTu;
    bool apd_enabled = false;
    double loss_prob = 0.0;

    std::vector<int> mean_cqi;          // per client; cycled if shorter
    double stay_prob = 0.9;
    std::vector<std::string> sequences; // per client; cycled if shorter

    ApdConfig apd;
    TcpConfig tcp;
    ProtocolConfig proto;
    UplinkConfig uplink;
    MlwdfConfig mlwdf;

    int ack_sample_window = 8;    // ACK feedback samples kept per client
    int history_window = 64;      // sub-packet / CQI history length
    int rate_sample_ttis = 100;   // transmission-rate sampling period
    int apd_period_ttis = 250;    // periodic drop pass cadence
    int air_latency_ttis = 4;     // scheduling-to-delivery latency each way
    int cold_start_ttis = 100;    // full-packet requirement before feedback exists
    int buffer_target_segments = 2;
    int startup_segments = 1;
    double ema_horizon_ttis = 1000; // PF/M-LWDF throughput smoothing
    int mac_discard_ttis = 0;       // MAC queue wait bound; 0 disables expiry
};

struct ClientReport {
    int id = 0;
    std::string sequence;
    double throughput_kbps = 0.0; // unique delivered payload
    long long delivered_bytes = 0;
    long long generated_bytes = 0;
    long long dropped_packets = 0;
    long long dropped_bytes = 0;
    double dropped_importance = 0.0;
    double total_importance = 0.0;
    double quality_retention = 1.0;
    double base_psnr_db = 0.0;
    double est_psnr_db = 0.0;
    long long rebuffer_events = 0;
    double rebuffer_seconds = 0.0;
    double startup_seconds = -1.0; // -1: playback never started
    long frames_played = 0;
    long long timeouts = 0;
    long long retransmitted_packets = 0;
    long long mac_expired_packets = 0;
};

struct MetricsReport {
    std::uint64_t seed = 0;
    double duration_seconds = 0.0;
    std::string dl_sched;
    std::string ul_sched;
    bool apd_enabled = false;
    std::vector<ClientReport> clients;
    double system_throughput_kbps = 0.0;
    double total_rebuffer_seconds = 0.0;
    long long total_rebuffer_events = 0;
    double mean_quality_retention = 1.0;
    double mean_est_psnr_db = 0.0;
    bool bytes_conserved = true;
};

// Optional output streams; null pointers disable a stream.
struct RunSinks {
    std::ostream* metrics = nullptr;   // rows: metric,tti,client,value
    std::ostream* tcp_trace = nullptr; // rows: tti,client,cwnd,ssthresh
    int log_level = 0;                 // 0 off, 1 summary, 2 per-TTI allocations
};

// Mean PSNR estimate from retained importance share.
double estimate_psnr(double base_psnr_db, double quality_retention);
double base_psnr_for(const std::string& sequence_name);

MetricsReport run_simulation(const SimConfig& cfg, const RunSinks& sinks = {});

} // namespace crosslayer
