// Command-line front end: run one scenario, sweep a dimension, or validate
// a configuration. Config errors exit with status 2.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crosslayer/errors.hpp"
#include "crosslayer/scenario.hpp"

namespace {

crosslayer::ScenarioConfig build_config(const std::string& preset_name,
                                        const std::string& config_path,
                                        const std::vector<std::string>& overrides) {
    crosslayer::ScenarioConfig cfg;
    if (!config_path.empty() && !preset_name.empty())
        throw crosslayer::ConfigError("--preset and --config are mutually exclusive");
    if (!config_path.empty())
        cfg = crosslayer::load_config_file(config_path);
    else
        cfg = crosslayer::preset(preset_name.empty() ? "paper_8c_16rb" : preset_name);
    for (const std::string& o : overrides) crosslayer::apply_override(cfg, o);
    return cfg;
}

void print_summary(const crosslayer::MetricsReport& rep) {
    std::cout << "system_kbps=" << rep.system_throughput_kbps
              << " rebuffer_s=" << rep.total_rebuffer_seconds
              << " rebuffer_events=" << rep.total_rebuffer_events
              << " mean_qr=" << rep.mean_quality_retention
              << " mean_psnr_db=" << rep.mean_est_psnr_db
              << " bytes_conserved=" << (rep.bytes_conserved ? "yes" : "no") << '\n';
    for (const crosslayer::ClientReport& c : rep.clients)
        std::cout << "client " << c.id << " (" << c.sequence << "): kbps=" << c.throughput_kbps
                  << " rebuffer_s=" << c.rebuffer_seconds << " qr=" << c.quality_retention
                  << " psnr_db=" << c.est_psnr_db << " timeouts=" << c.timeouts << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-layer video delivery simulator for a simplified LTE cell"};
    app.require_subcommand(1);

    std::string preset_name;
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "out";

    CLI::App* run = app.add_subcommand("run", "Run one scenario and write result files");
    run->add_option("--preset,-p", preset_name, "Preset name (default paper_8c_16rb)");
    run->add_option("--config,-c", config_path, "Config file path");
    run->add_option("--set,-s", overrides, "Override, key=value (repeatable)");
    run->add_option("--out,-o", out_dir, "Output directory (default out)");

    std::string dimension;
    int seeds = 3;
    CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter sweep and write sweep.csv");
    sweep->add_option("--dimension,-d", dimension, "clients | dl_rbs | guard_time")->required();
    sweep->add_option("--preset,-p", preset_name, "Preset name (default paper_8c_16rb)");
    sweep->add_option("--config,-c", config_path, "Config file path");
    sweep->add_option("--set,-s", overrides, "Override, key=value (repeatable)");
    sweep->add_option("--seeds", seeds, "Seeds per point (default 3)");
    sweep->add_option("--out,-o", out_dir, "Output directory (default out)");

    CLI::App* validate = app.add_subcommand("validate", "Check a configuration and print it");
    validate->add_option("--preset,-p", preset_name, "Preset name (default paper_8c_16rb)");
    validate->add_option("--config,-c", config_path, "Config file path");
    validate->add_option("--set,-s", overrides, "Override, key=value (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        const crosslayer::ScenarioConfig cfg = build_config(preset_name, config_path, overrides);
        if (run->parsed()) {
            const crosslayer::MetricsReport rep = crosslayer::run_scenario(cfg, out_dir);
            print_summary(rep);
            std::cout << "wrote " << out_dir << "/report.json, metrics.csv, tcp_trace.csv\n";
        } else if (sweep->parsed()) {
            crosslayer::run_sweep(cfg, dimension, seeds, out_dir);
            std::cout << "wrote " << out_dir << "/sweep.csv\n";
        } else if (validate->parsed()) {
            std::cout << crosslayer::canonical_config(cfg);
            std::cout << "config_hash=0x" << std::hex << crosslayer::config_hash(cfg) << '\n';
            std::cout << "ok\n";
        }
    } catch (const crosslayer::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const crosslayer::ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
