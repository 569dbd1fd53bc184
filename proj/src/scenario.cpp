// Preset catalog, config parsing/overrides, canonical hashing, and the
// run/sweep drivers with their CSV/JSON outputs.
#include "crosslayer/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "crosslayer/errors.hpp"

namespace fs = std::filesystem;

namespace crosslayer {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long long r = std::stoll(trim(v), &pos);
        if (pos != trim(v).size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer for '" + key + "': '" + v + "'");
    }
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double r = std::stod(trim(v), &pos);
        if (pos != trim(v).size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for '" + key + "': '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    if (t == "on" || t == "true" || t == "1" || t == "yes") return true;
    if (t == "off" || t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("invalid boolean for '" + key + "': '" + v + "'");
}

DlSched parse_dl_sched(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    if (t == "td") return DlSched::kTd;
    if (t == "maxci") return DlSched::kMaxci;
    if (t == "pf") return DlSched::kPf;
    if (t == "rr") return DlSched::kRr;
    if (t == "mlwdf") return DlSched::kMlwdf;
    throw ConfigError("invalid value for '" + key + "': '" + v +
                      "' (expected td|maxci|pf|rr|mlwdf)");
}

UlSched parse_ul_sched(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    if (t == "tu") return UlSched::kTu;
    if (t == "maxci") return UlSched::kMaxci;
    if (t == "pf") return UlSched::kPf;
    if (t == "rr") return UlSched::kRr;
    if (t == "mlwdf") return UlSched::kMlwdf;
    throw ConfigError("invalid value for '" + key + "': '" + v +
                      "' (expected tu|maxci|pf|rr|mlwdf)");
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"name", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.name = trim(v); }},
        {"clients",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1 || n > 256) throw ConfigError("'" + k + "' must lie in [1,256]");
             c.sim.num_clients = static_cast<int>(n);
         }},
        {"dl_rbs",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1 || n > 1024) throw ConfigError("'" + k + "' must lie in [1,1024]");
             c.sim.dl_rbs = static_cast<int>(n);
         }},
        {"ul_rbs",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1 || n > 1024) throw ConfigError("'" + k + "' must lie in [1,1024]");
             c.sim.ul_rbs = static_cast<int>(n);
         }},
        {"duration_ttis",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.duration_ttis = static_cast<long>(n);
         }},
        {"seed",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             c.sim.seed = static_cast<std::uint64_t>(parse_int(k, v));
         }},
        {"dl_sched",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             c.sim.dl_sched = parse_dl_sched(k, v);
         }},
        {"ul_sched",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             c.sim.ul_sched = parse_ul_sched(k, v);
         }},
        {"apd",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             c.sim.apd_enabled = parse_bool(k, v);
         }},
        {"loss_prob",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double p = parse_real(k, v);
             if (p < 0.0 || p >= 1.0) throw ConfigError("'" + k + "' must lie in [0,1)");
             c.sim.loss_prob = p;
         }},
        {"stay_prob",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double p = parse_real(k, v);
             if (p < 0.0 || p > 1.0) throw ConfigError("'" + k + "' must lie in [0,1]");
             c.sim.stay_prob = p;
         }},
        {"sequences",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             std::vector<std::string> names = split(v, ',');
             if (names.empty()) throw ConfigError("'" + k + "' must list at least one sequence");
             for (const std::string& n : names) {
                 try {
                     profile_by_name(n);
                 } catch (const std::exception&) {
                     throw ConfigError("unknown sequence in '" + k + "': '" + n + "'");
                 }
             }
             c.sim.sequences = std::move(names);
         }},
        {"mean_cqi",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             std::vector<int> vals;
             for (const std::string& p : split(v, ',')) {
                 const long long n = parse_int(k, p);
                 if (n < 1 || n > 15) throw ConfigError("'" + k + "' values must lie in [1,15]");
                 vals.push_back(static_cast<int>(n));
             }
             if (vals.empty()) throw ConfigError("'" + k + "' must list at least one value");
             c.sim.mean_cqi = std::move(vals);
         }},
        {"apd.smoothing",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0 || x >= 1.0) throw ConfigError("'" + k + "' must lie in (0,1)");
             c.sim.apd.smoothing = x;
         }},
        {"apd.history_window",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.apd.history_window = static_cast<int>(n);
         }},
        {"apd.guard_time",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x < 0.0) throw ConfigError("'" + k + "' must be non-negative");
             c.sim.apd.guard_time = x;
         }},
        {"tcp.mss",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.tcp.mss = n;
         }},
        {"tcp.initial_window_segments",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.tcp.initial_window_segments = static_cast<int>(n);
         }},
        {"tcp.initial_ssthresh",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.tcp.initial_ssthresh = n;
         }},
        {"tcp.rto_init",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0) throw ConfigError("'" + k + "' must be positive");
             c.sim.tcp.rto_init = x;
         }},
        {"tcp.rto_min",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0) throw ConfigError("'" + k + "' must be positive");
             c.sim.tcp.rto_min = x;
         }},
        {"tcp.rto_max",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0) throw ConfigError("'" + k + "' must be positive");
             c.sim.tcp.rto_max = x;
         }},
        {"protocol.ack_bytes",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0) throw ConfigError("'" + k + "' must be positive");
             c.sim.proto.ack_bytes = x;
         }},
        {"protocol.payload_bytes",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0) throw ConfigError("'" + k + "' must be positive");
             c.sim.proto.payload_bytes = x;
         }},
        {"protocol.tti_seconds",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0) throw ConfigError("'" + k + "' must be positive");
             c.sim.proto.tti_seconds = x;
         }},
        {"uplink.delta",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0) throw ConfigError("'" + k + "' must be positive");
             c.sim.uplink.delta = x;
         }},
        {"uplink.beta_c",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0) throw ConfigError("'" + k + "' must be positive");
             c.sim.uplink.beta_c = x;
         }},
        {"uplink.gamma",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0) throw ConfigError("'" + k + "' must be positive");
             c.sim.uplink.gamma = x;
         }},
        {"mlwdf.drop_prob",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0 || x >= 1.0) throw ConfigError("'" + k + "' must lie in (0,1)");
             c.sim.mlwdf.drop_prob = x;
         }},
        {"mlwdf.delay_target",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x <= 0.0) throw ConfigError("'" + k + "' must be positive");
             c.sim.mlwdf.delay_target = x;
         }},
        {"engine.ack_sample_window",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.ack_sample_window = static_cast<int>(n);
         }},
        {"engine.history_window",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.history_window = static_cast<int>(n);
         }},
        {"engine.rate_sample_ttis",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.rate_sample_ttis = static_cast<int>(n);
         }},
        {"engine.apd_period_ttis",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.apd_period_ttis = static_cast<int>(n);
         }},
        {"engine.air_latency_ttis",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.air_latency_ttis = static_cast<int>(n);
         }},
        {"engine.cold_start_ttis",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 0) throw ConfigError("'" + k + "' must be non-negative");
             c.sim.cold_start_ttis = static_cast<int>(n);
         }},
        {"engine.buffer_target_segments",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.buffer_target_segments = static_cast<int>(n);
         }},
        {"engine.startup_segments",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 1) throw ConfigError("'" + k + "' must be positive");
             c.sim.startup_segments = static_cast<int>(n);
         }},
        {"engine.ema_horizon_ttis",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const double x = parse_real(k, v);
             if (x < 1.0) throw ConfigError("'" + k + "' must be at least 1");
             c.sim.ema_horizon_ttis = x;
         }},
        {"engine.mac_discard_ttis",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
             const long long n = parse_int(k, v);
             if (n < 0) throw ConfigError("'" + k + "' must be non-negative");
             c.sim.mac_discard_ttis = static_cast<int>(n);
         }},
    };
    return table;
}

void set_key(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key: '" + key + "'");
    it->second(cfg, key, value);
}

std::string fmt_real(double v) {
    std::ostringstream out;
    out.precision(12);
    out << v;
    return out.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw ValidationError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

nlohmann::json report_to_json(const ScenarioConfig& cfg, const MetricsReport& rep) {
    nlohmann::json j;
    j["name"] = cfg.name;
    std::ostringstream hash;
    hash << "0x" << std::hex << config_hash(cfg);
    j["config_hash"] = hash.str();
    j["seed"] = rep.seed;
    j["duration_seconds"] = rep.duration_seconds;
    j["dl_sched"] = rep.dl_sched;
    j["ul_sched"] = rep.ul_sched;
    j["apd"] = rep.apd_enabled;
    j["bytes_conserved"] = rep.bytes_conserved;
    j["system"] = {
        {"throughput_kbps", rep.system_throughput_kbps},
        {"rebuffer_seconds", rep.total_rebuffer_seconds},
        {"rebuffer_events", rep.total_rebuffer_events},
        {"mean_quality_retention", rep.mean_quality_retention},
        {"mean_est_psnr_db", rep.mean_est_psnr_db},
    };
    j["clients"] = nlohmann::json::array();
    for (const ClientReport& c : rep.clients) {
        j["clients"].push_back({
            {"id", c.id},
            {"sequence", c.sequence},
            {"throughput_kbps", c.throughput_kbps},
            {"delivered_bytes", c.delivered_bytes},
            {"generated_bytes", c.generated_bytes},
            {"dropped_packets", c.dropped_packets},
            {"dropped_bytes", c.dropped_bytes},
            {"quality_retention", c.quality_retention},
            {"base_psnr_db", c.base_psnr_db},
            {"est_psnr_db", c.est_psnr_db},
            {"rebuffer_events", c.rebuffer_events},
            {"rebuffer_seconds", c.rebuffer_seconds},
            {"startup_seconds", c.startup_seconds},
            {"frames_played", c.frames_played},
            {"timeouts", c.timeouts},
            {"retransmitted_packets", c.retransmitted_packets},
            {"mac_expired_packets", c.mac_expired_packets},
        });
    }
    return j;
}

} // namespace

ScenarioConfig preset(const std::string& name) {
    ScenarioConfig cfg;
    cfg.name = name;
    if (name == "paper_8c_16rb") {
        // Mixed cell: a few strong clients plus several cell-edge clients keep
        // the grid contended enough to separate the scheduler families.
        cfg.sim.num_clients = 8;
        cfg.sim.dl_rbs = 16;
        cfg.sim.ul_rbs = 8;
        cfg.sim.duration_ttis = 16000;
        cfg.sim.sequences = {"flower", "coastguard", "news", "highway",
                             "soccer", "foreman",    "crew", "bus"};
        cfg.sim.mean_cqi = {10, 9, 1, 1, 4, 1, 4, 10};
        return cfg;
    }
    if (name == "paper_poor_8c_16rb") {
        // Uniformly poor cell-edge cell: every client overloaded, with a MAC
        // wait bound so stale packets expire, which is where selective drops
        // have room to work.
        cfg.sim.num_clients = 8;
        cfg.sim.dl_rbs = 16;
        cfg.sim.ul_rbs = 8;
        cfg.sim.duration_ttis = 16000;
        cfg.sim.sequences = {"foreman", "foreman", "foreman", "foreman",
                             "foreman", "foreman", "foreman", "foreman"};
        cfg.sim.mean_cqi = {3, 3, 3, 3, 3, 3, 3, 3};
        cfg.sim.mac_discard_ttis = 1250;
        cfg.sim.apd.smoothing = 0.2;
        return cfg;
    }
    if (name == "smoke_2c_4rb") {
        cfg.sim.num_clients = 2;
        cfg.sim.dl_rbs = 4;
        cfg.sim.ul_rbs = 2;
        cfg.sim.duration_ttis = 2000;
        cfg.sim.sequences = {"news", "highway"};
        cfg.sim.mean_cqi = {10, 7};
        return cfg;
    }
    throw ConfigError("unknown preset: '" + name + "'");
}

std::vector<std::string> preset_names() {
    return {"paper_8c_16rb", "paper_poor_8c_16rb", "smoke_2c_4rb"};
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    ScenarioConfig cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line = line.substr(0, cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key=value at line " + std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
        if (!section.empty() && section != "sim") key = section + "." + key;
        set_key(cfg, key, value);
    }
    return cfg;
}

void apply_override(ScenarioConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value: '" + assignment + "'");
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    if (key.empty()) throw ConfigError("override must look like key=value: '" + assignment + "'");
    set_key(cfg, key, value);
}

std::string canonical_config(const ScenarioConfig& cfg) {
    std::ostringstream out;
    out << "name=" << cfg.name << '\n';
    out << "clients=" << cfg.sim.num_clients << '\n';
    out << "dl_rbs=" << cfg.sim.dl_rbs << '\n';
    out << "ul_rbs=" << cfg.sim.ul_rbs << '\n';
    out << "duration_ttis=" << cfg.sim.duration_ttis << '\n';
    out << "seed=" << cfg.sim.seed << '\n';
    out << "dl_sched=" << to_string(cfg.sim.dl_sched) << '\n';
    out << "ul_sched=" << to_string(cfg.sim.ul_sched) << '\n';
    out << "apd=" << (cfg.sim.apd_enabled ? "on" : "off") << '\n';
    out << "loss_prob=" << fmt_real(cfg.sim.loss_prob) << '\n';
    out << "stay_prob=" << fmt_real(cfg.sim.stay_prob) << '\n';
    out << "sequences=";
    for (size_t i = 0; i < cfg.sim.sequences.size(); ++i)
        out << (i ? "," : "") << cfg.sim.sequences[i];
    out << '\n';
    out << "mean_cqi=";
    for (size_t i = 0; i < cfg.sim.mean_cqi.size(); ++i)
        out << (i ? "," : "") << cfg.sim.mean_cqi[i];
    out << '\n';
    out << "apd.smoothing=" << fmt_real(cfg.sim.apd.smoothing) << '\n';
    out << "apd.history_window=" << cfg.sim.apd.history_window << '\n';
    out << "apd.guard_time=" << fmt_real(cfg.sim.apd.guard_time) << '\n';
    out << "tcp.mss=" << cfg.sim.tcp.mss << '\n';
    out << "tcp.initial_window_segments=" << cfg.sim.tcp.initial_window_segments << '\n';
    out << "tcp.initial_ssthresh=" << cfg.sim.tcp.initial_ssthresh << '\n';
    out << "tcp.rto_init=" << fmt_real(cfg.sim.tcp.rto_init) << '\n';
    out << "tcp.rto_min=" << fmt_real(cfg.sim.tcp.rto_min) << '\n';
    out << "tcp.rto_max=" << fmt_real(cfg.sim.tcp.rto_max) << '\n';
    out << "protocol.ack_bytes=" << fmt_real(cfg.sim.proto.ack_bytes) << '\n';
    out << "protocol.payload_bytes=" << fmt_real(cfg.sim.proto.payload_bytes) << '\n';
    out << "protocol.tti_seconds=" << fmt_real(cfg.sim.proto.tti_seconds) << '\n';
    out << "uplink.delta=" << fmt_real(cfg.sim.uplink.delta) << '\n';
    out << "uplink.beta_c=" << fmt_real(cfg.sim.uplink.beta_c) << '\n';
    out << "uplink.gamma=" << fmt_real(cfg.sim.uplink.gamma) << '\n';
    out << "mlwdf.drop_prob=" << fmt_real(cfg.sim.mlwdf.drop_prob) << '\n';
    out << "mlwdf.delay_target=" << fmt_real(cfg.sim.mlwdf.delay_target) << '\n';
    out << "engine.ack_sample_window=" << cfg.sim.ack_sample_window << '\n';
    out << "engine.history_window=" << cfg.sim.history_window << '\n';
    out << "engine.rate_sample_ttis=" << cfg.sim.rate_sample_ttis << '\n';
    out << "engine.apd_period_ttis=" << cfg.sim.apd_period_ttis << '\n';
    out << "engine.air_latency_ttis=" << cfg.sim.air_latency_ttis << '\n';
    out << "engine.cold_start_ttis=" << cfg.sim.cold_start_ttis << '\n';
    out << "engine.buffer_target_segments=" << cfg.sim.buffer_target_segments << '\n';
    out << "engine.startup_segments=" << cfg.sim.startup_segments << '\n';
    out << "engine.ema_horizon_ttis=" << fmt_real(cfg.sim.ema_horizon_ttis) << '\n';
    out << "engine.mac_discard_ttis=" << cfg.sim.mac_discard_ttis << '\n';
    return out.str();
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
    const std::string text = canonical_config(cfg);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

int log_level_from_env() {
    const char* v = std::getenv("CROSSLAYER_LOG");
    if (v == nullptr) return 0;
    const std::string s = trim(v);
    if (s.empty() || s == "off") return 0;
    if (s == "summary") return 1;
    if (s == "trace") return 2;
    throw ConfigError("CROSSLAYER_LOG must be off, summary, or trace (got '" + s + "')");
}

MetricsReport run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const fs::path metrics_tmp = dir / "metrics.csv.tmp";
    const fs::path trace_tmp = dir / "tcp_trace.csv.tmp";
    MetricsReport rep;
    {
        std::ofstream metrics(metrics_tmp, std::ios::trunc);
        std::ofstream trace(trace_tmp, std::ios::trunc);
        if (!metrics || !trace)
            throw ValidationError("cannot open output files under: " + out_dir);
        metrics << "metric,tti,client,value\n";
        trace << "tti,client,cwnd,ssthresh\n";
        RunSinks sinks;
        sinks.metrics = &metrics;
        sinks.tcp_trace = &trace;
        sinks.log_level = log_level_from_env();
        rep = run_simulation(cfg.sim, sinks);
    }
    fs::rename(metrics_tmp, dir / "metrics.csv");
    fs::rename(trace_tmp, dir / "tcp_trace.csv");
    write_file_atomic(dir / "report.json", report_to_json(cfg, rep).dump(2) + "\n");
    return rep;
}

std::vector<SweepPoint> sweep_points(const ScenarioConfig& base, const std::string& dimension) {
    std::vector<SweepPoint> points;
    if (dimension == "clients") {
        for (int k : {8, 12, 16, 20}) {
            SweepPoint p{"clients=" + std::to_string(k), base};
            p.cfg.sim.num_clients = k;
            points.push_back(std::move(p));
        }
        return points;
    }
    if (dimension == "dl_rbs") {
        for (int n : {16, 18, 20, 22}) {
            SweepPoint p{"dl_rbs=" + std::to_string(n), base};
            p.cfg.sim.dl_rbs = n;
            points.push_back(std::move(p));
        }
        return points;
    }
    if (dimension == "guard_time") {
        for (int i = 0; i <= 6; ++i) {
            const double g = 0.5 * i;
            std::ostringstream label;
            label << "guard=" << fmt_real(g);
            SweepPoint p{label.str(), base};
            p.cfg.sim.apd_enabled = true; // the guard only matters with drops on
            p.cfg.sim.apd.guard_time = g;
            points.push_back(std::move(p));
        }
        return points;
    }
    throw ConfigError("unknown sweep dimension: '" + dimension +
                      "' (expected clients|dl_rbs|guard_time)");
}

void run_sweep(const ScenarioConfig& base, const std::string& dimension, int seeds,
               const std::string& out_dir) {
    if (seeds < 1) throw ConfigError("sweep needs at least one seed");
    const std::vector<SweepPoint> points = sweep_points(base, dimension);
    const int log_level = log_level_from_env();
    std::ostringstream out;
    out << "point,dl_sched,ul_sched,apd,seed,system_kbps,rebuffer_s,mean_qr\n";
    for (const SweepPoint& p : points) {
        for (int i = 0; i < seeds; ++i) {
            SimConfig sim = p.cfg.sim;
            sim.seed = p.cfg.sim.seed + static_cast<std::uint64_t>(i);
            RunSinks sinks;
            sinks.log_level = log_level;
            const MetricsReport rep = run_simulation(sim, sinks);
            out << p.label << ',' << rep.dl_sched << ',' << rep.ul_sched << ','
                << (rep.apd_enabled ? 1 : 0) << ',' << rep.seed << ','
                << fmt_real(rep.system_throughput_kbps) << ','
                << fmt_real(rep.total_rebuffer_seconds) << ','
                << fmt_real(rep.mean_quality_retention) << '\n';
            if (log_level >= 1)
                std::cerr << "sweep " << p.label << " seed=" << rep.seed << " done\n";
        }
    }
    fs::create_directories(fs::path(out_dir));
    write_file_atomic(fs::path(out_dir) / "sweep.csv", out.str());
}

} // namespace crosslayer
