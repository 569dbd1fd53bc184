#include "crosslayer/video_trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "crosslayer/errors.hpp"
#include "crosslayer/rng.hpp"

namespace crosslayer {

namespace {

constexpr int kFramesPerSegment = 60;
constexpr int kGopLength = 30;          // one I frame every 30 frames
constexpr double kIFrameWeight = 5.0;   // byte weight of an I frame vs a P frame
constexpr double kTargetPacketBytes = 750.0;
constexpr int kMacroblocksPerFrame = 396; // CIF: 22 x 18

double round6(double v) {
    return std::llround(v * 1e6) / 1e6;
}

// Split `total` into parts proportional to `weights`, exactly preserving the sum.
std::vector<long long> largest_remainder_split(long long total, const std::vector<double>& weights) {
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<long long> out(weights.size(), 0);
    std::vector<std::pair<double, size_t>> rema(weights.size());
    long long assigned = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
        const double exact = total * weights[i] / wsum;
        out[i] = static_cast<long long>(exact);
        assigned += out[i];
        rema[i] = {exact - static_cast<double>(out[i]), i};
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (long long left = total - assigned; left > 0; --left)
        ++out[rema[static_cast<size_t>(total - assigned - left)].second];
    return out;
}

} // namespace

long long VideoSequence::segment_bytes(size_t seg) const {
    long long sum = 0;
    for (const auto& p : segments[seg]) sum += p.size_bytes;
    return sum;
}

double VideoSequence::segment_kbps(size_t seg, int frames_per_segment) const {
    const double seconds = static_cast<double>(frames_per_segment) / fps;
    return static_cast<double>(segment_bytes(seg)) * 8.0 / 1000.0 / seconds;
}

long long VideoSequence::total_bytes() const {
    long long sum = 0;
    for (size_t s = 0; s < segments.size(); ++s) sum += segment_bytes(s);
    return sum;
}

size_t VideoSequence::total_packets() const {
    size_t n = 0;
    for (const auto& s : segments) n += s.size();
    return n;
}

bool operator==(const VideoSequence& a, const VideoSequence& b) {
    if (a.name != b.name || a.width != b.width || a.height != b.height || a.fps != b.fps)
        return false;
    if (a.segments.size() != b.segments.size()) return false;
    for (size_t s = 0; s < a.segments.size(); ++s) {
        const auto& pa = a.segments[s];
        const auto& pb = b.segments[s];
        if (pa.size() != pb.size()) return false;
        for (size_t i = 0; i < pa.size(); ++i) {
            if (pa[i].segment_index != pb[i].segment_index || pa[i].frame_index != pb[i].frame_index ||
                pa[i].packet_index != pb[i].packet_index || pa[i].size_bytes != pb[i].size_bytes ||
                pa[i].ref_fraction != pb[i].ref_fraction || pa[i].importance != pb[i].importance)
                return false;
        }
    }
    return true;
}

double compute_importance(std::span<const MacroblockStat> macroblocks, int width, int height,
                          double ref_fraction) {
    if (width <= 0 || height <= 0)
        throw ValidationError("compute_importance: frame dimensions must be positive");
    if (ref_fraction < 0.0 || ref_fraction > kBetaMax)
        throw ValidationError("compute_importance: ref_fraction outside [0, 4]");
    double d_cur = 0.0;
    for (const auto& mb : macroblocks) {
        if (mb.mode == MbMode::kInter) {
            double q_sum = 0.0;
            for (const auto& mv : mb.motion_vectors) {
                const double qx = mv.x / width;
                const double qy = mv.y / height;
                q_sum += std::sqrt(qx * qx + qy * qy);
            }
            d_cur += mb.weight * q_sum;
        } else {
            d_cur += mb.weight;
        }
    }
    return d_cur * (1.0 + ref_fraction);
}

const std::vector<SequenceProfile>& sequence_profiles() {
    static const std::vector<SequenceProfile> kProfiles = {
        {"flower.cif", 352, 288, 30, {1509.4, 1784.2, 1642.9, 1945.8, 1615.4, 1718.9, 1658.0, 1895.6}},
        {"coastguard.cif", 352, 288, 30, {1316.7, 1302.7, 1051.4, 1000.2, 945.9, 1316.7, 1302.7, 1051.4}},
        {"news.cif", 352, 288, 30, {333.0, 387.5, 362.4, 356.6, 370.3, 333.0, 387.5, 362.4}},
        {"highway.cif", 352, 288, 30, {250.1, 286.9, 258.6, 265.6, 273.1, 252.9, 269.5, 370.2}},
        {"soccer.cif", 352, 288, 30, {744.1, 816.9, 913.2, 773.8, 899.8, 744.1, 816.9, 913.2}},
        {"foreman.cif", 352, 288, 30, {470.6, 464.8, 589.3, 646.6, 600.8, 470.6, 464.8, 589.3}},
        {"crew.cif", 352, 288, 30, {618.2, 965.8, 1189.0, 918.5, 925.1, 618.2, 965.8, 1189.0}},
        {"bus.cif", 352, 288, 30, {1470.2, 1351.8, 1439.6, 1390.3, 1405.3, 1470.2, 1351.8, 1439.6}},
    };
    return kProfiles;
}

const SequenceProfile& profile_by_name(const std::string& name) {
    for (const auto& p : sequence_profiles())
        if (p.name == name) return p;
    // Accept the bare stem too ("news" for "news.cif").
    for (const auto& p : sequence_profiles())
        if (p.name == name + ".cif") return p;
    throw ConfigError("unknown video sequence: " + name);
}

VideoSequence generate_trace(const SequenceProfile& profile, std::uint64_t seed) {
    if (profile.width <= 0 || profile.height <= 0 || profile.fps <= 0)
        throw ConfigError("generate_trace: bad profile dimensions/fps for " + profile.name);
    if (profile.segment_kbps.empty())
        throw ConfigError("generate_trace: profile has no segment rates: " + profile.name);

    Rng rng = Rng(seed).fork(std::hash<std::string>{}(profile.name));
    VideoSequence seq;
    seq.name = profile.name;
    seq.width = profile.width;
    seq.height = profile.height;
    seq.fps = profile.fps;
    seq.segments.resize(profile.segment_kbps.size());

    const double seg_seconds = static_cast<double>(kFramesPerSegment) / profile.fps;
    for (size_t s = 0; s < profile.segment_kbps.size(); ++s) {
        const long long seg_target =
            std::llround(profile.segment_kbps[s] * 1000.0 * seg_seconds / 8.0);

        std::vector<double> frame_weights(kFramesPerSegment);
        for (int f = 0; f < kFramesPerSegment; ++f) {
            const bool is_i = (f % kGopLength) == 0;
            frame_weights[f] = (is_i ? kIFrameWeight : 1.0) * rng.next_real(0.9, 1.1);
        }
        const auto frame_bytes = largest_remainder_split(seg_target, frame_weights);

        auto& packets = seq.segments[s];
        for (int f = 0; f < kFramesPerSegment; ++f) {
            const bool is_i = (f % kGopLength) == 0;
            const long long fbytes = std::max<long long>(1, frame_bytes[f]);
            const int npkts = std::max(1, static_cast<int>(std::llround(fbytes / kTargetPacketBytes)));

            std::vector<double> even(npkts, 1.0);
            const auto pkt_bytes = largest_remainder_split(fbytes, even);
            const auto pkt_mbs = largest_remainder_split(kMacroblocksPerFrame,
                                                         std::vector<double>(pkt_bytes.begin(), pkt_bytes.end()));

            for (int p = 0; p < npkts; ++p) {
                VideoPacket pkt;
                pkt.segment_index = static_cast<int>(s) + 1;
                pkt.frame_index = f + 1;
                pkt.packet_index = p + 1;
                pkt.size_bytes = std::max<long long>(1, pkt_bytes[p]);

                const int mbs = std::max<long long>(1, pkt_mbs[p]);
                for (int m = 0; m < mbs; ++m) {
                    MacroblockStat mb;
                    if (is_i || rng.next_double() < 0.04) {
                        const bool fine = rng.next_double() < 0.6;
                        mb.mode = fine ? MbMode::kIntra4x4 : MbMode::kIntra16x16;
                        mb.weight = fine ? kWeightIntra4x4 : kWeightIntra16x16;
                    } else {
                        mb.mode = MbMode::kInter;
                        mb.weight = kWeightInter;
                        const int blocks = 1 + (rng.next_double() < 0.5 ? 1 : 0);
                        for (int b = 0; b < blocks; ++b)
                            mb.motion_vectors.push_back({rng.next_normal() * 2.5, rng.next_normal() * 2.5});
                    }
                    pkt.macroblocks.push_back(std::move(mb));
                }

                double beta;
                if (is_i) {
                    beta = rng.next_real(3.2, kBetaMax);
                } else {
                    // Later frames in the segment have fewer dependents.
                    const double left = 1.0 - static_cast<double>(f) / kFramesPerSegment;
                    beta = left * rng.next_real(0.1, 0.3);
                }
                pkt.ref_fraction = round6(std::min(beta, kBetaMax));
                pkt.importance = round6(
                    compute_importance(pkt.macroblocks, profile.width, profile.height, pkt.ref_fraction));
                packets.push_back(std::move(pkt));
            }
        }
    }
    return seq;
}

void save_trace(const VideoSequence& seq, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("save_trace: cannot open " + path);
    out << "seq " << seq.name << ' ' << seq.width << ' ' << seq.height << ' ' << seq.fps << '\n';
    char buf[160];
    for (const auto& segment : seq.segments) {
        for (const auto& p : segment) {
            std::snprintf(buf, sizeof buf, "pkt %d %d %d %lld %.6f %.6f\n", p.segment_index,
                          p.frame_index, p.packet_index, p.size_bytes, p.importance, p.ref_fraction);
            out << buf;
        }
    }
    if (!out) throw ConfigError("save_trace: write failed for " + path);
}

VideoSequence load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_trace: cannot open " + path);

    VideoSequence seq;
    bool have_header = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "seq") {
            if (have_header)
                throw ParseError("load_trace: duplicate seq header at line " + std::to_string(lineno));
            ls >> seq.name >> seq.width >> seq.height >> seq.fps;
            if (!ls || seq.width <= 0 || seq.height <= 0 || seq.fps <= 0)
                throw ParseError("load_trace: bad seq header at line " + std::to_string(lineno));
            have_header = true;
        } else if (tag == "pkt") {
            if (!have_header)
                throw ParseError("load_trace: pkt record before seq header at line " + std::to_string(lineno));
            VideoPacket p;
            ls >> p.segment_index >> p.frame_index >> p.packet_index >> p.size_bytes >>
                p.importance >> p.ref_fraction;
            if (!ls)
                throw ParseError("load_trace: malformed pkt record at line " + std::to_string(lineno));
            if (p.segment_index < 1 || p.frame_index < 1 || p.packet_index < 1)
                throw ParseError("load_trace: non-positive indices at line " + std::to_string(lineno));
            if (p.size_bytes <= 0)
                throw ValidationError("load_trace: packet " + std::to_string(p.segment_index) + "/" +
                                      std::to_string(p.frame_index) + "/" + std::to_string(p.packet_index) +
                                      " has non-positive size (line " + std::to_string(lineno) + ")");
            if (p.ref_fraction < 0.0 || p.ref_fraction > kBetaMax || p.importance < 0.0)
                throw ParseError("load_trace: out-of-range beta/importance at line " + std::to_string(lineno));
            if (static_cast<size_t>(p.segment_index) > seq.segments.size())
                seq.segments.resize(p.segment_index);
            seq.segments[p.segment_index - 1].push_back(std::move(p));
        } else {
            throw ParseError("load_trace: unknown record '" + tag + "' at line " + std::to_string(lineno));
        }
    }
    if (!have_header) throw ParseError("load_trace: missing seq header in " + path);
    return seq;
}

} // namespace crosslayer
