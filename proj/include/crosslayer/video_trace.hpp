// Video packet traces: per-packet importance model, seeded synthetic trace
// generation for the eight CIF reference sequences, and trace file I/O.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace crosslayer {

inline constexpr double kBetaMax = 4.0; // cap on the dependency fraction

enum class MbMode { kIntra4x4, kIntra16x16, kInter };

// Per-macroblock weights of the importance model.
inline constexpr double kWeightIntra4x4 = 0.8;
inline constexpr double kWeightIntra16x16 = 0.6;
inline constexpr double kWeightInter = 0.2;

struct MotionVector {
    double x = 0.0;
    double y = 0.0;
};

struct MacroblockStat {
    MbMode mode = MbMode::kInter;
    double weight = kWeightInter; // in (0,1]
    std::vector<MotionVector> motion_vectors; // inter blocks only
};

struct VideoPacket {
    int client_id = 0;
    int segment_index = 0; // 1-based
    int frame_index = 0;   // 1-based within the segment
    int packet_index = 0;  // 1-based within the frame
    long long size_bytes = 0;
    std::vector<MacroblockStat> macroblocks; // generation-time detail, not persisted
    double ref_fraction = 0.0; // beta in [0, kBetaMax]
    double importance = 0.0;   // cached compute_importance result
};

struct SequenceProfile {
    std::string name;
    int width = 352;
    int height = 288;
    int fps = 30;
    std::vector<double> segment_kbps; // coding rate per 2 s segment
};

struct VideoSequence {
    std::string name;
    int width = 0;
    int height = 0;
    int fps = 0;
    std::vector<std::vector<VideoPacket>> segments;

    long long segment_bytes(size_t seg) const;
    // Realized coding rate of a segment, derived from packet sizes.
    double segment_kbps(size_t seg, int frames_per_segment = 60) const;
    long long total_bytes() const;
    size_t total_packets() const;
};

bool operator==(const VideoSequence& a, const VideoSequence& b);

// Importance of one packet's payload: sum of intra-MB weights plus, for each
// inter MB, its weight times the summed normalized motion magnitudes of its
// blocks; the whole term scaled by (1 + beta) for downstream dependency.
// Throws ValidationError on non-positive frame dimensions.
double compute_importance(std::span<const MacroblockStat> macroblocks, int width, int height,
                          double ref_fraction);

// The eight CIF reference sequences with per-segment coding rates.
const std::vector<SequenceProfile>& sequence_profiles();
const SequenceProfile& profile_by_name(const std::string& name);

// Synthesizes an 8-segment, 60-frames-per-segment trace whose realized
// per-segment byte totals match the profile's coding rates within 2%.
// Deterministic for a given (profile, seed).
VideoSequence generate_trace(const SequenceProfile& profile, std::uint64_t seed);

void save_trace(const VideoSequence& seq, const std::string& path);
VideoSequence load_trace(const std::string& path);

} // namespace crosslayer
