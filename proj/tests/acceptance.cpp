// Acceptance gate: one pass/fail line per criterion, non-zero exit on any
// failure. Criteria 3 and 8 drive the installed CLI binary (IRQC_BIN);
// fixture files come from IRQC_FIXTURES.
#include "irqc/dtt.hpp"
#include "irqc/gic.hpp"
#include "irqc/io.hpp"
#include "irqc/rtm.hpp"
#include "irqc/sim.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace irqc;

namespace {

std::string g_bin;
std::string g_fixtures;
fs::path g_tmp;
std::vector<std::string> g_details;

void detail(const std::string& msg) {
    g_details.push_back(msg);
}

void require(bool condition, const std::string& what) {
    if (!condition)
        throw std::runtime_error(what);
}

int run_cli(const std::string& args) {
    std::string cmd = g_bin + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return rc < 0 ? rc : WEXITSTATUS(rc);
}

std::string fixture(const std::string& name) {
    return g_fixtures + "/" + name;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

dtt::Artifacts fixture_artifacts(const SystemConfig& config, const std::string& overrides_name) {
    io::Overrides overrides = io::load_overrides(fixture(overrides_name));
    MaskingMap map = overrides.masking
                         ? *overrides.masking
                         : dtt::generate_masking_map(config, dtt::compute_effects(config));
    dtt::ControlTable table = dtt::generate_control_table(config);
    for (const auto& [reg, mode] : overrides.ctl_entries)
        table.entries[reg] = mode;
    return dtt::build_artifacts(config, map, table);
}

// --- criterion 1 -----------------------------------------------------------

void criterion_decode_bands() {
    const double eps = 1e-9;
    struct Case {
        double qos;
        ControlFlag cf;
    };
    const Case cases[] = {
        {0.0, ControlFlag::T3},        {10.0, ControlFlag::T3},
        {25.0, ControlFlag::T2},       {25.0 + eps, ControlFlag::T2},
        {50.0, ControlFlag::T1},       {50.0 + eps, ControlFlag::T1},
        {75.0, ControlFlag::T0},       {75.0 + eps, ControlFlag::T0},
        {100.0, ControlFlag::T0},
    };
    for (const Case& c : cases)
        require(rtm::decode_qos(c.qos) == c.cf,
                "decode_qos(" + std::to_string(c.qos) + ") wrong band");
}

// --- criterion 2 -----------------------------------------------------------

void criterion_overhead() {
    double at10 = rtm::overhead_model(0.782, 10.0);
    require(at10 >= 7.77 && at10 <= 7.87, "overhead at 10 us outside [7.77, 7.87]");
    for (double p : {100.0, 200.0, 500.0, 1000.0, 10000.0})
        require(rtm::overhead_model(0.782, p) < 0.8,
                "overhead at " + std::to_string(p) + " us not below 0.8%");
    detail("0.782 us @ 10 us -> " + std::to_string(at10) + "%");
}

// --- criterion 3 -----------------------------------------------------------

using Rows = std::vector<std::set<IrqRef>>;

void check_masking_table(const std::string& cfg, const std::string& map,
                         const Rows& expected) {
    fs::path out = g_tmp / (cfg + ".art");
    int rc = run_cli("dtt --config " + fixture(cfg) + " --overrides " + fixture(map) +
                     " --out " + out.string());
    require(rc == 0, "cmd_dtt failed for " + cfg);
    dtt::Artifacts artifacts = dtt::import_artifacts(out.string());
    require(artifacts.masking.masked == expected, "masked sets differ for " + cfg);
}

void criterion_masking_tables() {
    check_masking_table("dual_vm.cfg", "dual_vm.map",
                        {{{1, 3}},
                         {{1, 2}, {1, 3}},
                         {{1, 1}, {1, 2}, {1, 3}},
                         {{1, 0}, {1, 1}, {1, 2}, {1, 3}}});
    check_masking_table(
        "quad_setup1.cfg", "quad_setup1.map",
        {{},
         {{2, 2}, {2, 3}, {3, 2}, {3, 3}},
         {{1, 1}, {2, 1}, {2, 2}, {2, 3}, {3, 0}, {3, 1}, {3, 2}, {3, 3}},
         {{1, 0}, {1, 1}, {2, 0}, {2, 1}, {2, 2}, {2, 3}, {3, 0}, {3, 1}, {3, 2}, {3, 3}}});
    check_masking_table(
        "quad_setup2.cfg", "quad_setup2.map",
        {{},
         {{1, 3}, {2, 3}, {3, 2}, {3, 3}},
         {{1, 2}, {1, 3}, {2, 1}, {2, 2}, {2, 3}, {3, 0}, {3, 1}, {3, 2}, {3, 3}},
         {{1, 0}, {1, 1}, {1, 2}, {1, 3}, {2, 0}, {2, 1}, {2, 2}, {2, 3}, {3, 0}, {3, 1},
          {3, 2}, {3, 3}}});
    detail("12 mode rows, exact set equality");
}

// --- criterion 4 -----------------------------------------------------------

void criterion_toy_trajectory() {
    SystemConfig config = io::load_config(fixture("quad_setup1.cfg"));
    config.stepwise = true;
    dtt::Artifacts artifacts = fixture_artifacts(config, "quad_setup1.map");
    Distributor dist = Distributor::from_config(config);
    rtm::Rtm rtm(artifacts, config);

    // Scripted cf_D trajectory, C and B pinned at T0: degradation then
    // recovery. Registers carry cf_D in bits 0-1.
    std::vector<int> modes{rtm.current_mode()};
    std::vector<std::uint32_t> regs{0x01, 0x02, 0x03, 0x00, 0x00, 0x00};
    std::vector<Distributor::Write> mask_writes, unmask_writes;
    for (std::uint32_t reg : regs) {
        dist.clear_write_log();
        modes.push_back(rtm.control_step(reg, dist));
        for (const auto& w : dist.write_log())
            (w.set ? unmask_writes : mask_writes).push_back(w);
    }
    require(modes == std::vector<int>{0, 1, 2, 3, 2, 1, 0},
            "mode sequence is not 0-1-2-fail-safe-2-1-0");

    require(mask_writes.size() == unmask_writes.size(), "mask/unmask counts differ");
    std::size_t n = mask_writes.size();
    require(n == 10, "expected 10 masked pins in the fail-safe ramp");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = mask_writes[i];
        const auto& u = unmask_writes[n - 1 - i];
        require(m.word == u.word && m.value == u.value,
                "unmask order is not the exact reverse of mask order");
    }
    for (int pin : config.vm(config.asil_d_vm()).pins)
        require(dist.delivery_enabled(pin), "ASIL-D pin was touched");
}

// --- criterion 5 -----------------------------------------------------------

void criterion_mitigation() {
    SystemConfig config = io::load_config(fixture("dual_vm.cfg"));
    sim::Scenario scenario = io::load_scenario(fixture("dual_interf.scn"));
    const double onset_us = 100000.0;
    const double duration_us = 10e6;
    const double period = config.actuation_period_us;

    // Calibration: unmitigated, the critical profile settles at 2.13x.
    dtt::Artifacts plain = fixture_artifacts(config, "dual_vm.map");
    sim::RunOptions options;
    options.duration_us = duration_us;
    options.rtm_enabled = false;
    sim::RunReport unmitigated = sim::run(config, plain, scenario, options);
    double calibrated =
        unmitigated.mean_slowdown_between(0, config, onset_us + period, duration_us);
    require(std::abs(calibrated - 2.13) <= 0.05,
            "unmitigated slowdown " + std::to_string(calibrated) + " not 2.13 +/- 0.05");

    // Mitigated with the hold control table: steady state within 5 periods.
    dtt::Artifacts hold = fixture_artifacts(config, "dual_vm_hold.map");
    options.rtm_enabled = true;
    sim::RunReport mitigated = sim::run(config, hold, scenario, options);
    double steady =
        mitigated.mean_slowdown_between(0, config, onset_us + 5 * period, duration_us);
    require(steady <= 1.10,
            "steady critical slowdown " + std::to_string(steady) + " above 1.10");
    detail("unmitigated " + std::to_string(calibrated) + "x, mitigated " +
           std::to_string(steady) + "x");
}

// --- criterion 6 -----------------------------------------------------------

void criterion_intermediate_guarantees() {
    SystemConfig config = io::load_config(fixture("quad_setup1.cfg"));
    dtt::Artifacts artifacts = fixture_artifacts(config, "quad_setup1.map");
    sim::Scenario scenario = io::load_scenario(fixture("quad_interf.scn"));

    sim::RunOptions options;
    options.duration_us = 10e6;
    sim::RunReport with_rtm = sim::run(config, artifacts, scenario, options);
    options.rtm_enabled = false;
    sim::RunReport without = sim::run(config, artifacts, scenario, options);

    long d_with = 0, d_without = 0;
    for (std::size_t i = 0; i < with_rtm.tasks.size(); ++i) {
        const auto& row = with_rtm.tasks[i];
        Criticality level = config.vm(row.irq.vm).level;
        if (level == Criticality::ASIL_C || level == Criticality::ASIL_B)
            require(row.completions > 0, "intermediate task " + to_string(row.irq) +
                                             " was completely stopped");
        if (level == Criticality::ASIL_D) {
            d_with += row.completions;
            d_without += without.tasks[i].completions;
        }
    }
    require(d_with >= d_without, "RTM lowered ASIL-D throughput");
    detail("ASIL-D completions " + std::to_string(d_with) + " (RTM) vs " +
           std::to_string(d_without) + " (unmitigated)");
}

// --- criterion 7 -----------------------------------------------------------

SystemConfig random_config(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> vm_count(2, 4);
    std::uniform_int_distribution<int> irq_count(1, 4);
    std::uniform_int_distribution<int> level(0, 2);
    std::uniform_int_distribution<int> modes(2, 6);
    std::uniform_real_distribution<double> unit(0.01, 1.0);
    std::uniform_real_distribution<double> rate(0.0, 200.0);

    SystemConfig config;
    config.mode_count = modes(rng);
    config.alpha = unit(rng);
    config.beta = unit(rng);
    int pin = 32;
    int vms = vm_count(rng);
    for (int i = 0; i < vms; ++i) {
        VmConfig vm;
        vm.id = i;
        vm.level = i == 0 ? Criticality::ASIL_D : static_cast<Criticality>(level(rng));
        int irqs = irq_count(rng);
        for (int k = 0; k < irqs; ++k) {
            vm.pins.push_back(pin++);
            double period = 10.0 + rate(rng);
            vm.tasks.push_back({unit(rng), rate(rng), rate(rng), period,
                                unit(rng) * period});
        }
        config.vms.push_back(std::move(vm));
    }
    return config;
}

void criterion_oracles() {
    std::mt19937_64 rng(0x5EEDu);

    // Non-stepwise compute_dm is exactly the table lookup, for every
    // register of every table width up to 4 flags.
    std::uniform_int_distribution<int> mode_count(2, 6);
    for (int num_flags = 1; num_flags <= 4; ++num_flags) {
        for (int round = 0; round < 50; ++round) {
            dtt::ControlTable table;
            table.mode_count = mode_count(rng);
            std::uniform_int_distribution<int> any_mode(0, table.mode_count - 1);
            std::uniform_int_distribution<std::uint32_t> reg_dist(
                0, (1u << (2 * num_flags)) - 1);
            for (int e = 0; e < 8; ++e)
                table.entries[reg_dist(rng)] = any_mode(rng);
            for (std::uint32_t reg = 0; reg < (1u << (2 * num_flags)); ++reg) {
                int expected = table.lookup(reg);
                require(rtm::compute_dm(reg, table, any_mode(rng), false) == expected,
                        "compute_dm diverged from the table enumeration");
            }
        }
    }

    // Generated masking maps pass the validator on 1000 random configs.
    for (int i = 0; i < 1000; ++i) {
        SystemConfig config = random_config(rng);
        config.validate();
        MaskingMap map = dtt::generate_masking_map(config, dtt::compute_effects(config));
        require(map.mode_count() == config.mode_count, "generated map has wrong mode count");
        require(map.masked.front().empty(), "mode 0 of a generated map is not empty");
        dtt::ValidationReport report = dtt::validate_masking_map(map, config);
        if (!report.ok())
            throw std::runtime_error("generated map failed validation: " +
                                     report.violations.front().describe());
    }
    detail("800 table enumerations, 1000 random configs");
}

// --- criterion 8 -----------------------------------------------------------

void criterion_determinism() {
    // Artifact export is byte-stable and import/export is the identity.
    fs::path art_a = g_tmp / "det_a.art";
    fs::path art_b = g_tmp / "det_b.art";
    std::string dtt_args = "dtt --config " + fixture("dual_vm.cfg") + " --overrides " +
                           fixture("dual_vm.map") + " --out ";
    require(run_cli(dtt_args + art_a.string()) == 0, "cmd_dtt failed");
    require(run_cli(dtt_args + art_b.string()) == 0, "cmd_dtt failed");
    std::string bytes = slurp(art_a);
    require(bytes == slurp(art_b), "two dtt exports differ");
    dtt::Artifacts imported = dtt::import_artifacts(art_a.string());
    require(dtt::serialize_artifacts(imported) == bytes, "import/export not the identity");

    // ControlRegister pack/unpack identity, exhaustive up to 4 flags.
    for (int num_flags = 1; num_flags <= 4; ++num_flags) {
        std::vector<VmId> layout;
        for (int j = 0; j < num_flags; ++j)
            layout.push_back(j);
        for (std::uint32_t value = 0; value < (1u << (2 * num_flags)); ++value)
            require(unpack_register(value, layout).packed() == value,
                    "pack/unpack identity broken");
    }

    // Identical seeds produce identical CSVs.
    fs::path out_a = g_tmp / "run_a";
    fs::path out_b = g_tmp / "run_b";
    std::string sim_args = "sim --config " + fixture("dual_vm.cfg") + " --artifact " +
                           art_a.string() + " --scenario " + fixture("dual_interf.scn") +
                           " --duration-us 300000 --seed 7 --out ";
    require(run_cli(sim_args + out_a.string()) == 0, "cmd_sim failed");
    require(run_cli(sim_args + out_b.string()) == 0, "cmd_sim failed");
    for (const char* name : {"report.csv", "qos.csv", "modes.csv", "trace.csv"})
        require(slurp(out_a / name) == slurp(out_b / name),
                std::string(name) + " differs between identical runs");
}

// --- criterion 9 -----------------------------------------------------------

void criterion_gic() {
    std::map<int, VmId> routing;
    for (int pin = 0; pin < 96; ++pin)
        routing[pin] = pin % 3;
    Distributor dist(routing);
    std::vector<bool> oracle(96, true);

    std::mt19937_64 rng(0xD157u);
    std::uniform_int_distribution<std::size_t> word(0, 2);
    std::uniform_int_distribution<std::uint32_t> bits;
    std::uniform_int_distribution<int> coin(0, 1);
    for (int i = 0; i < 10000; ++i) {
        std::size_t w = word(rng);
        std::uint32_t value = bits(rng);
        bool set = coin(rng) == 1;
        if (set)
            dist.write_isenabler(w, value);
        else
            dist.write_icenabler(w, value);
        for (int b = 0; b < 32; ++b)
            if (value >> b & 1u)
                oracle[w * 32 + static_cast<std::size_t>(b)] = set;
    }
    for (int pin = 0; pin < 96; ++pin)
        require(dist.delivery_enabled(pin) == oracle[static_cast<std::size_t>(pin)],
                "pin " + std::to_string(pin) + " diverged from the per-bit oracle");
}

// ---------------------------------------------------------------------------

struct Criterion {
    const char* name;
    std::function<void()> run;
};

} // namespace

int main() {
    const char* bin = std::getenv("IRQC_BIN");
    const char* fixtures = std::getenv("IRQC_FIXTURES");
    if (!bin || !fixtures) {
        std::cerr << "IRQC_BIN and IRQC_FIXTURES must be set\n";
        return 2;
    }
    g_bin = bin;
    g_fixtures = fixtures;
    g_tmp = fs::temp_directory_path() / "irqc_acceptance";
    fs::remove_all(g_tmp);
    fs::create_directories(g_tmp);

    const Criterion criteria[] = {
        {"decode bands exact", criterion_decode_bands},
        {"overhead relation", criterion_overhead},
        {"masking tables", criterion_masking_tables},
        {"toy-example trajectory", criterion_toy_trajectory},
        {"calibrated mitigation effect", criterion_mitigation},
        {"intermediate guarantees", criterion_intermediate_guarantees},
        {"oracle equivalence", criterion_oracles},
        {"determinism and round-trips", criterion_determinism},
        {"gic bit-exactness", criterion_gic},
    };

    int failures = 0;
    int index = 0;
    for (const Criterion& c : criteria) {
        ++index;
        g_details.clear();
        std::string verdict = "PASS";
        std::string reason;
        try {
            c.run();
        } catch (const std::exception& e) {
            verdict = "FAIL";
            reason = e.what();
            ++failures;
        }
        std::cout << "criterion " << index << " (" << c.name << "): " << verdict;
        if (!reason.empty())
            std::cout << " — " << reason;
        else if (!g_details.empty())
            std::cout << " — " << g_details.front();
        std::cout << "\n";
    }
    return failures == 0 ? 0 : 1;
}
