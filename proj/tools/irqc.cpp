#include "irqc/dtt.hpp"
#include "irqc/io.hpp"
#include "irqc/numfmt.hpp"
#include "irqc/rtm.hpp"
#include "irqc/sim.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace irqc;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open " + path + " for writing");
    return out;
}

int cmd_dtt(const std::string& config_path, const std::string& overrides_path,
            const std::string& out_path) {
    SystemConfig config = io::load_config(config_path);
    io::Overrides overrides;
    if (!overrides_path.empty())
        overrides = io::load_overrides(overrides_path);

    auto effects = dtt::compute_effects(config);
    MaskingMap map =
        overrides.masking ? *overrides.masking : dtt::generate_masking_map(config, effects);

    dtt::ValidationReport report = dtt::validate_masking_map(map, config);
    if (map.mode_count() != config.mode_count) {
        std::cerr << "error: masking map has " << map.mode_count() << " modes, config expects "
                  << config.mode_count << "\n";
        return 1;
    }
    if (!report.ok()) {
        std::cerr << "masking map validation failed:\n";
        for (const auto& v : report.violations)
            std::cerr << "  " << v.describe() << "\n";
        return 1;
    }
    std::cout << "masking map: " << map.mode_count() << " modes, valid\n";

    dtt::ControlTable table = dtt::generate_control_table(config);
    for (const auto& [reg, mode] : overrides.ctl_entries)
        table.entries[reg] = mode;
    int num_flags = static_cast<int>(register_layout(config).size());
    if (auto witness = dtt::check_monotone(table, num_flags)) {
        std::cerr << "control table override violates cf_D monotonicity: register 0x" << std::hex
                  << witness->lower << " maps above register 0x" << witness->higher << std::dec
                  << "\n";
        return 1;
    }

    dtt::Artifacts artifacts = dtt::build_artifacts(config, map, table);
    dtt::export_artifacts(artifacts, config, out_path);
    std::cout << "artifacts written to " << out_path << "\n";
    return 0;
}

void print_instrumentation(const rtm::Instrumentation& instr) {
    std::cout << "measuring point      count      mean_us  max_us\n";
    for (int mp = 0; mp < rtm::MP_COUNT; ++mp) {
        const auto& p = instr.points[static_cast<std::size_t>(mp)];
        std::cout << std::left << std::setw(20) << rtm::measuring_point_name(mp) << std::right
                  << std::setw(8) << p.count << "  " << format_number(p.mean_us()) << "  "
                  << format_number(p.max_us) << "\n";
    }
}

int cmd_sim(const std::string& config_path, const std::string& artifact_path,
            const std::string& scenario_path, double duration_us, std::uint64_t seed,
            const std::string& out_dir, const std::string& rtm_mode,
            const std::string& stepwise) {
    SystemConfig config = io::load_config(config_path);
    if (stepwise == "on")
        config.stepwise = true;
    else if (stepwise == "off")
        config.stepwise = false;
    dtt::Artifacts artifacts = dtt::import_artifacts(artifact_path);
    sim::Scenario scenario = io::load_scenario(scenario_path);

    sim::RunOptions options;
    options.duration_us = duration_us;
    options.seed = seed;
    options.rtm_enabled = rtm_mode == "on";
    options.with_baseline = true;
    sim::RunReport report = sim::run(config, artifacts, scenario, options);

    fs::create_directories(out_dir);
    io::write_report_csv((fs::path(out_dir) / "report.csv").string(), report, config);
    io::write_qos_csv((fs::path(out_dir) / "qos.csv").string(), report);
    io::write_modes_csv((fs::path(out_dir) / "modes.csv").string(), report);
    io::write_trace_csv((fs::path(out_dir) / "trace.csv").string(), report);

    std::cout << "simulated " << format_number(duration_us) << " us, seed " << seed << "\n";
    for (const auto& [vm, s] : report.mean_slowdown)
        std::cout << "vm " << vm << " mean slowdown " << format_number(s) << "\n";
    if (options.rtm_enabled)
        print_instrumentation(report.instr);
    return 0;
}

SystemConfig bench_config() {
    SystemConfig config;
    config.actuation_period_us = 100.0;
    config.mode_count = 4;
    config.alpha = 1.0;
    config.beta = 0.0;
    VmConfig critical;
    critical.id = 0;
    critical.level = Criticality::ASIL_D;
    critical.pins = {32};
    critical.tasks = {{0.3, 100.0, 10.0, 100.0, 100.0}};
    VmConfig noisy;
    noisy.id = 1;
    noisy.level = Criticality::QM;
    for (int k = 0; k < 4; ++k) {
        noisy.pins.push_back(33 + k);
        noisy.tasks.push_back({0.25, 50.0, 20.0, 20.0, 20.0});
    }
    config.vms = {critical, noisy};
    return config;
}

int cmd_bench(long iterations, const std::vector<double>& periods, double worst_case_us,
              const std::string& out_dir) {
    if (iterations < 1000) {
        std::cerr << "error: --iterations must be at least 1000\n";
        return 1;
    }
    SystemConfig config = bench_config();
    auto effects = dtt::compute_effects(config);
    dtt::Artifacts artifacts = dtt::build_artifacts(
        config, dtt::generate_masking_map(config, effects), dtt::generate_control_table(config));
    Distributor dist = Distributor::from_config(config);
    rtm::Rtm rtm(artifacts, config);

    EventVector reference = config.solo_reference(0);
    double tick_max_us = 0.0;
    double tick_sum_us = 0.0;
    for (long i = 0; i < iterations; ++i) {
        // Sweep the sampled counts so every QoS band and mode transition
        // is exercised.
        double ratio = static_cast<double>(i % 100) / 99.0;
        std::map<VmId, EventVector> samples;
        samples[0] = {reference.l2 * ratio, reference.bus * ratio};
        samples[1] = {};
        auto start = std::chrono::steady_clock::now();
        rtm.tick(samples, dist);
        auto end = std::chrono::steady_clock::now();
        double us = std::chrono::duration<double, std::micro>(end - start).count();
        tick_sum_us += us;
        tick_max_us = std::max(tick_max_us, us);
    }

    const auto& instr = rtm.instrumentation();
    print_instrumentation(instr);
    double tick_mean_us = tick_sum_us / static_cast<double>(iterations);
    std::cout << "full tick: mean " << format_number(tick_mean_us) << " us, max "
              << format_number(tick_max_us) << " us\n";

    fs::create_directories(out_dir);
    {
        auto out = open_out((fs::path(out_dir) / "bench_points.csv").string());
        out << "point,count,mean_us,max_us\n";
        for (int mp = 0; mp < rtm::MP_COUNT; ++mp) {
            const auto& p = instr.points[static_cast<std::size_t>(mp)];
            out << rtm::measuring_point_name(mp) << "," << p.count << ","
                << format_number(p.mean_us()) << "," << format_number(p.max_us) << "\n";
        }
        out << "tick," << iterations << "," << format_number(tick_mean_us) << ","
            << format_number(tick_max_us) << "\n";
    }
    {
        auto out = open_out((fs::path(out_dir) / "bench_overhead.csv").string());
        out << "period_us,measured_worst_us,measured_overhead_pct,model_worst_us,model_overhead_"
               "pct\n";
        for (double period : periods) {
            out << format_number(period) << "," << format_number(tick_max_us) << ","
                << format_number(rtm::overhead_model(tick_max_us, period)) << ","
                << format_number(worst_case_us) << ","
                << format_number(rtm::overhead_model(worst_case_us, period)) << "\n";
            std::cout << "period " << format_number(period) << " us: measured overhead "
                      << format_number(rtm::overhead_model(tick_max_us, period))
                      << "%, model overhead "
                      << format_number(rtm::overhead_model(worst_case_us, period)) << "%\n";
        }
    }
    return 0;
}

int cmd_report(const std::string& in_dir) {
    std::ifstream in((fs::path(in_dir) / "report.csv").string());
    if (!in) {
        std::cerr << "error: cannot open report.csv in " << in_dir << "\n";
        return 1;
    }
    std::string line;
    std::getline(in, line);   // header
    for (const char* col : {"vm", "k", "completions", "solo", "rel_throughput"})
        std::cout << std::left << std::setw(14) << col;
    std::cout << "mean_slowdown\n";
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ','))
            std::cout << std::left << std::setw(14) << (field.empty() ? "-" : field);
        std::cout << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"IRQ coloring toolkit: design-time tool, run-time mechanism, simulator"};
    app.require_subcommand(1);

    std::string config_path, overrides_path, out_path, artifact_path, scenario_path;
    std::string rtm_mode = "on", stepwise = "default", out_dir = ".", in_dir = ".";
    double duration_us = 0.0, worst_case_us = 0.782;
    std::uint64_t seed = 0;
    long iterations = 100000;
    std::vector<double> periods = {10.0, 100.0, 1000.0};

    auto* dtt_cmd = app.add_subcommand("dtt", "generate and export RTM artifacts");
    dtt_cmd->add_option("--config", config_path, "system config file")->required();
    dtt_cmd->add_option("--overrides", overrides_path, "masking map / control table overrides");
    dtt_cmd->add_option("--out", out_path, "artifact output file")->required();

    auto* sim_cmd = app.add_subcommand("sim", "run a scenario and emit CSV reports");
    sim_cmd->add_option("--config", config_path, "system config file")->required();
    sim_cmd->add_option("--artifact", artifact_path, "artifact file from 'dtt'")->required();
    sim_cmd->add_option("--scenario", scenario_path, "scenario file")->required();
    sim_cmd->add_option("--duration-us", duration_us, "simulated duration")->required();
    sim_cmd->add_option("--seed", seed, "run seed recorded in outputs");
    sim_cmd->add_option("--out", out_dir, "output directory")->required();
    sim_cmd->add_option("--rtm", rtm_mode, "enable the run-time mechanism (on|off)")
        ->check(CLI::IsMember({"on", "off"}));
    sim_cmd->add_option("--stepwise", stepwise, "override stepwise transitions (on|off)")
        ->check(CLI::IsMember({"on", "off", "default"}));

    auto* bench_cmd = app.add_subcommand("bench", "RTM microbenchmark and overhead curve");
    bench_cmd->add_option("--iterations", iterations, "timing iterations (>= 1000)");
    bench_cmd->add_option("--periods", periods, "actuation periods in microseconds");
    bench_cmd->add_option("--worst-case-us", worst_case_us,
                          "worst-case handler time for the model column");
    bench_cmd->add_option("--out", out_dir, "output directory");

    auto* report_cmd = app.add_subcommand("report", "render a CSV summary from 'sim' output");
    report_cmd->add_option("--in", in_dir, "directory with sim outputs")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (dtt_cmd->parsed())
            return cmd_dtt(config_path, overrides_path, out_path);
        if (sim_cmd->parsed())
            return cmd_sim(config_path, artifact_path, scenario_path, duration_us, seed, out_dir,
                           rtm_mode, stepwise);
        if (bench_cmd->parsed())
            return cmd_bench(iterations, periods, worst_case_us, out_dir);
        if (report_cmd->parsed())
            return cmd_report(in_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
