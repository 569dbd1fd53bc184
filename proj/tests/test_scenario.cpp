// Tests for presets, config files, overrides, hashing, and the run drivers.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crosslayer/errors.hpp"
#include "crosslayer/scenario.hpp"
#include "doctest.h"

using namespace crosslayer;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    static int counter = 0;
    const fs::path dir =
        fs::temp_directory_path() / ("crosslayer_test_" + tag + "_" + std::to_string(++counter));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string first_line(const std::string& text) {
    return text.substr(0, text.find('\n'));
}

} // namespace

TEST_SUITE("scenario") {

TEST_CASE("every preset loads with its pinned shape") {
    const ScenarioConfig mixed = preset("paper_8c_16rb");
    CHECK(mixed.name == "paper_8c_16rb");
    CHECK(mixed.sim.num_clients == 8);
    CHECK(mixed.sim.dl_rbs == 16);
    CHECK(mixed.sim.ul_rbs == 8);
    CHECK(mixed.sim.duration_ttis == 16000);
    CHECK(mixed.sim.sequences.size() == 8);
    CHECK(mixed.sim.mean_cqi == std::vector<int>{10, 9, 1, 1, 4, 1, 4, 10});
    CHECK(!mixed.sim.apd_enabled);
    CHECK(mixed.sim.mac_discard_ttis == 0);

    const ScenarioConfig poor = preset("paper_poor_8c_16rb");
    CHECK(poor.sim.num_clients == 8);
    CHECK(poor.sim.sequences == std::vector<std::string>(8, "foreman"));
    CHECK(poor.sim.mean_cqi == std::vector<int>(8, 3));
    CHECK(poor.sim.mac_discard_ttis == 1250);
    CHECK(poor.sim.apd.smoothing == doctest::Approx(0.2));

    const ScenarioConfig smoke = preset("smoke_2c_4rb");
    CHECK(smoke.sim.num_clients == 2);
    CHECK(smoke.sim.dl_rbs == 4);
    CHECK(smoke.sim.ul_rbs == 2);
    CHECK(smoke.sim.duration_ttis == 2000);

    for (const std::string& name : preset_names()) CHECK_NOTHROW(preset(name));
    CHECK_THROWS_AS(preset("no_such_preset"), ConfigError);
}

TEST_CASE("overrides change exactly the named key") {
    ScenarioConfig cfg = preset("smoke_2c_4rb");
    apply_override(cfg, "dl_sched=maxci");
    CHECK(cfg.sim.dl_sched == DlSched::kMaxci);
    apply_override(cfg, "ul_sched=rr");
    CHECK(cfg.sim.ul_sched == UlSched::kRr);
    apply_override(cfg, "apd=on");
    CHECK(cfg.sim.apd_enabled);
    apply_override(cfg, "apd=off");
    CHECK(!cfg.sim.apd_enabled);
    apply_override(cfg, "seed=99");
    CHECK(cfg.sim.seed == 99);
    apply_override(cfg, "clients=3");
    CHECK(cfg.sim.num_clients == 3);
    apply_override(cfg, "mean_cqi=5,9,12");
    CHECK(cfg.sim.mean_cqi == std::vector<int>{5, 9, 12});
    apply_override(cfg, "sequences=news,crew");
    CHECK(cfg.sim.sequences == std::vector<std::string>{"news", "crew"});
    apply_override(cfg, "apd.guard_time=1.5");
    CHECK(cfg.sim.apd.guard_time == doctest::Approx(1.5));
    apply_override(cfg, "engine.mac_discard_ttis=600");
    CHECK(cfg.sim.mac_discard_ttis == 600);
    apply_override(cfg, " duration_ttis = 500 ");
    CHECK(cfg.sim.duration_ttis == 500);
}

TEST_CASE("bad overrides are rejected with a config error") {
    ScenarioConfig cfg = preset("smoke_2c_4rb");
    CHECK_THROWS_AS(apply_override(cfg, "no_equals_sign"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "=5"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "unknown_key=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "clients=abc"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "engine.mac_discard_ttis=-5"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "dl_sched=bogus"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "apd=maybe"), ConfigError);
}

TEST_CASE("config files parse sections, comments, and whitespace") {
    const fs::path dir = temp_dir("cfg");
    const fs::path file = dir / "scenario.cfg";
    {
        std::ofstream out(file);
        out << "# full-line comment\n"
            << "name = file_case\n"
            << "clients = 3        ; trailing comment\n"
            << "dl_rbs=6\n"
            << "\n"
            << "[sim]\n"
            << "ul_rbs = 3\n"
            << "sequences = news, highway ,crew\n"
            << "[apd]\n"
            << "smoothing = 0.4\n"
            << "guard_time = 2\n"
            << "[engine]\n"
            << "mac_discard_ttis = 250\n";
    }
    const ScenarioConfig cfg = load_config_file(file.string());
    CHECK(cfg.name == "file_case");
    CHECK(cfg.sim.num_clients == 3);
    CHECK(cfg.sim.dl_rbs == 6);
    CHECK(cfg.sim.ul_rbs == 3);
    CHECK(cfg.sim.sequences == std::vector<std::string>{"news", "highway", "crew"});
    CHECK(cfg.sim.apd.smoothing == doctest::Approx(0.4));
    CHECK(cfg.sim.apd.guard_time == doctest::Approx(2.0));
    CHECK(cfg.sim.mac_discard_ttis == 250);
    fs::remove_all(dir);
}

TEST_CASE("shipped preset files match the built-in presets") {
    for (const std::string& name : preset_names()) {
        const fs::path file = fs::path("presets") / (name + ".cfg");
        if (!fs::exists(file)) continue; // run from a directory without the tree
        const ScenarioConfig from_file = load_config_file(file.string());
        const ScenarioConfig built_in = preset(name);
        CHECK(canonical_config(from_file) == canonical_config(built_in));
    }
}

TEST_CASE("malformed config files name the offending line") {
    const fs::path dir = temp_dir("badcfg");
    auto write_and_load = [&dir](const std::string& body) {
        const fs::path file = dir / "bad.cfg";
        std::ofstream(file) << body;
        return load_config_file(file.string());
    };
    CHECK_THROWS_AS(write_and_load("clients 4\n"), ConfigError);
    CHECK_THROWS_AS(write_and_load("[apd\nsmoothing = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(write_and_load("= 4\n"), ConfigError);
    CHECK_THROWS_AS(write_and_load("nonsense = 4\n"), ConfigError);
    CHECK_THROWS_AS(load_config_file((dir / "missing.cfg").string()), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("canonical text and hash are stable and sensitive") {
    const ScenarioConfig a = preset("smoke_2c_4rb");
    const ScenarioConfig b = preset("smoke_2c_4rb");
    CHECK(canonical_config(a) == canonical_config(b));
    CHECK(config_hash(a) == config_hash(b));

    const std::string text = canonical_config(a);
    CHECK(text.find("clients=2\n") != std::string::npos);
    CHECK(text.find("dl_sched=td\n") != std::string::npos);
    CHECK(text.find("apd=off\n") != std::string::npos);
    CHECK(text.find("mean_cqi=10,7\n") != std::string::npos);

    ScenarioConfig c = preset("smoke_2c_4rb");
    apply_override(c, "seed=2");
    CHECK(config_hash(a) != config_hash(c));
    CHECK(canonical_config(c).find("seed=2\n") != std::string::npos);
}

TEST_CASE("log level reads the environment variable") {
    const char* old = std::getenv("CROSSLAYER_LOG");
    const std::string saved = old ? old : "";

    unsetenv("CROSSLAYER_LOG");
    CHECK(log_level_from_env() == 0);
    setenv("CROSSLAYER_LOG", "off", 1);
    CHECK(log_level_from_env() == 0);
    setenv("CROSSLAYER_LOG", "summary", 1);
    CHECK(log_level_from_env() == 1);
    setenv("CROSSLAYER_LOG", "trace", 1);
    CHECK(log_level_from_env() == 2);
    setenv("CROSSLAYER_LOG", "shouting", 1);
    CHECK_THROWS_AS(log_level_from_env(), ConfigError);

    if (old)
        setenv("CROSSLAYER_LOG", saved.c_str(), 1);
    else
        unsetenv("CROSSLAYER_LOG");
}

TEST_CASE("run_scenario writes the three result files") {
    ScenarioConfig cfg = preset("smoke_2c_4rb");
    apply_override(cfg, "duration_ttis=800");
    const fs::path dir = temp_dir("run");
    const MetricsReport rep = run_scenario(cfg, dir.string());

    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "metrics.csv"));
    CHECK(fs::exists(dir / "tcp_trace.csv"));
    CHECK(!fs::exists(dir / "report.json.tmp"));
    CHECK(!fs::exists(dir / "metrics.csv.tmp"));
    CHECK(!fs::exists(dir / "tcp_trace.csv.tmp"));

    CHECK(first_line(slurp(dir / "metrics.csv")) == "metric,tti,client,value");
    CHECK(first_line(slurp(dir / "tcp_trace.csv")) == "tti,client,cwnd,ssthresh");

    const nlohmann::json j = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(j["name"] == "smoke_2c_4rb");
    CHECK(j["seed"] == rep.seed);
    CHECK(j["dl_sched"] == rep.dl_sched);
    CHECK(j["bytes_conserved"] == rep.bytes_conserved);
    CHECK(j["system"]["throughput_kbps"].get<double>() ==
          doctest::Approx(rep.system_throughput_kbps));
    CHECK(j["clients"].size() == rep.clients.size());
    CHECK(j["clients"][0]["delivered_bytes"].get<long long>() == rep.clients[0].delivered_bytes);
    const std::string hash = j["config_hash"].get<std::string>();
    CHECK(hash.rfind("0x", 0) == 0);

    fs::remove_all(dir);
}

TEST_CASE("rerunning a scenario reproduces the files byte for byte") {
    ScenarioConfig cfg = preset("smoke_2c_4rb");
    apply_override(cfg, "duration_ttis=800");
    apply_override(cfg, "loss_prob=0.02");
    const fs::path d1 = temp_dir("rerun_a");
    const fs::path d2 = temp_dir("rerun_b");
    run_scenario(cfg, d1.string());
    run_scenario(cfg, d2.string());
    CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));
    CHECK(slurp(d1 / "metrics.csv") == slurp(d2 / "metrics.csv"));
    CHECK(slurp(d1 / "tcp_trace.csv") == slurp(d2 / "tcp_trace.csv"));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("sweep dimensions enumerate their pinned points") {
    const ScenarioConfig base = preset("smoke_2c_4rb");

    const auto clients = sweep_points(base, "clients");
    REQUIRE(clients.size() == 4);
    const std::vector<int> want_clients = {8, 12, 16, 20};
    for (size_t i = 0; i < clients.size(); ++i) {
        CHECK(clients[i].cfg.sim.num_clients == want_clients[i]);
        CHECK(clients[i].label == "clients=" + std::to_string(want_clients[i]));
        CHECK(clients[i].cfg.sim.dl_rbs == base.sim.dl_rbs);
        CHECK(clients[i].cfg.sim.seed == base.sim.seed);
    }

    const auto rbs = sweep_points(base, "dl_rbs");
    REQUIRE(rbs.size() == 4);
    const std::vector<int> want_rbs = {16, 18, 20, 22};
    for (size_t i = 0; i < rbs.size(); ++i) {
        CHECK(rbs[i].cfg.sim.dl_rbs == want_rbs[i]);
        CHECK(rbs[i].cfg.sim.num_clients == base.sim.num_clients);
    }

    const auto guard = sweep_points(base, "guard_time");
    REQUIRE(guard.size() == 7);
    for (size_t i = 0; i < guard.size(); ++i) {
        CHECK(guard[i].cfg.sim.apd.guard_time == doctest::Approx(0.5 * static_cast<double>(i)));
        CHECK(guard[i].cfg.sim.apd_enabled); // drops must be on for the guard to matter
    }

    CHECK_THROWS_AS(sweep_points(base, "voltage"), ConfigError);
}

TEST_CASE("run_sweep appends one row per point and seed") {
    ScenarioConfig base = preset("smoke_2c_4rb");
    apply_override(base, "duration_ttis=300");
    const fs::path dir = temp_dir("sweep");
    CHECK_THROWS_AS(run_sweep(base, "guard_time", 0, dir.string()), ConfigError);

    run_sweep(base, "guard_time", 1, dir.string());
    const std::string csv = slurp(dir / "sweep.csv");
    std::istringstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "point,dl_sched,ul_sched,apd,seed,system_kbps,rebuffer_s,mean_qr");
    int rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        REQUIRE(fields.size() == 8);
        CHECK(fields[0].rfind("guard=", 0) == 0);
        CHECK(fields[1] == "td");
        CHECK(fields[2] == "tu");
        CHECK(fields[3] == "1"); // the guard sweep forces drops on
        ++rows;
    }
    CHECK(rows == 7);
    fs::remove_all(dir);
}

} // TEST_SUITE
