#include "irqc/io.hpp"

#include "irqc/numfmt.hpp"

#include <fstream>
#include <sstream>

namespace irqc::io {

namespace {

[[noreturn]] void parse_fail(int line_no, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line_no) + ": " + msg);
}

IrqRef parse_irq_ref(const std::string& token, int line_no) {
    auto colon = token.find(':');
    if (colon == std::string::npos)
        parse_fail(line_no, "expected <vm>:<k>, got '" + token + "'");
    try {
        return {std::stoi(token.substr(0, colon)), std::stoi(token.substr(colon + 1))};
    } catch (const std::exception&) {
        parse_fail(line_no, "bad irq reference '" + token + "'");
    }
}

bool skip_line(const std::string& line) {
    for (char c : line) {
        if (c == '#')
            return true;
        if (c != ' ' && c != '\t')
            return false;
    }
    return true;   // blank
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open " + path + " for writing");
    return out;
}

} // namespace

SystemConfig parse_config(std::istream& in) {
    SystemConfig config;
    std::string line;
    int line_no = 0;
    bool saw_version = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line))
            continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "version") {
            int v = 0;
            ls >> v;
            if (v != 1)
                parse_fail(line_no, "unsupported config version");
            saw_version = true;
        } else if (key == "period") {
            if (!(ls >> config.actuation_period_us))
                parse_fail(line_no, "bad period");
        } else if (key == "weights") {
            if (!(ls >> config.weights.l2 >> config.weights.bus))
                parse_fail(line_no, "bad weights");
        } else if (key == "modes") {
            if (!(ls >> config.mode_count))
                parse_fail(line_no, "bad mode count");
        } else if (key == "interference") {
            if (!(ls >> config.alpha >> config.beta))
                parse_fail(line_no, "bad interference parameters");
        } else if (key == "llc") {
            if (!(ls >> config.llc_bytes))
                parse_fail(line_no, "bad llc size");
        } else if (key == "stepwise") {
            std::string v;
            ls >> v;
            if (v == "on")
                config.stepwise = true;
            else if (v == "off")
                config.stepwise = false;
            else
                parse_fail(line_no, "stepwise must be 'on' or 'off'");
        } else if (key == "vm") {
            VmId id;
            std::string level;
            if (!(ls >> id >> level))
                parse_fail(line_no, "expected 'vm <id> <level>'");
            if (config.find_vm(id))
                parse_fail(line_no, "duplicate VM " + std::to_string(id));
            VmConfig vm;
            vm.id = id;
            try {
                vm.level = criticality_from_string(level);
            } catch (const ConfigError& e) {
                parse_fail(line_no, e.what());
            }
            config.vms.push_back(std::move(vm));
        } else if (key == "irq") {
            std::string ref_tok, kw;
            if (!(ls >> ref_tok))
                parse_fail(line_no, "bad irq line");
            IrqRef ref = parse_irq_ref(ref_tok, line_no);
            VmConfig* vm = nullptr;
            for (auto& v : config.vms)
                if (v.id == ref.vm)
                    vm = &v;
            if (!vm)
                parse_fail(line_no, "irq references undeclared VM " + std::to_string(ref.vm));
            if (ref.k != vm->irq_count())
                parse_fail(line_no, "irq indices of a VM must be declared in order from 0");
            int pin = -1;
            TaskProfile task;
            auto need = [&](const char* name, double& dst) {
                if (!(ls >> kw) || kw != name)
                    parse_fail(line_no, std::string("expected '") + name + "' field");
                if (!(ls >> dst))
                    parse_fail(line_no, std::string("bad value for '") + name + "'");
            };
            if (!(ls >> kw) || kw != "pin" || !(ls >> pin))
                parse_fail(line_no, "expected 'pin <pin>'");
            need("footprint", task.footprint);
            need("l2", task.l2_rate);
            need("bus", task.bus_rate);
            need("period", task.period_us);
            need("wcet", task.wcet_us);
            vm->pins.push_back(pin);
            vm->tasks.push_back(task);
        } else if (key == "ref") {
            VmId id;
            EventVector ref;
            if (!(ls >> id >> ref.l2 >> ref.bus))
                parse_fail(line_no, "bad ref line");
            VmConfig* vm = nullptr;
            for (auto& v : config.vms)
                if (v.id == id)
                    vm = &v;
            if (!vm)
                parse_fail(line_no, "ref references undeclared VM " + std::to_string(id));
            vm->reference = ref;
        } else {
            parse_fail(line_no, "unknown key '" + key + "'");
        }
    }
    if (!saw_version)
        throw ConfigError("config misses 'version 1' line");
    config.validate();
    return config;
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path);
    try {
        return parse_config(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

sim::Scenario parse_scenario(std::istream& in) {
    sim::Scenario scenario;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line))
            continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "periodic") {
            std::string ref_tok;
            double period;
            if (!(ls >> ref_tok >> period))
                parse_fail(line_no, "expected 'periodic <vm>:<k> <period_us>'");
            scenario.periodics.push_back({parse_irq_ref(ref_tok, line_no), period});
        } else if (key == "at") {
            double t;
            std::string what;
            if (!(ls >> t >> what))
                parse_fail(line_no, "expected 'at <time_us> <directive>'");
            sim::Scenario::Event e;
            e.t_us = t;
            if (what == "trigger") {
                std::string ref_tok;
                if (!(ls >> ref_tok))
                    parse_fail(line_no, "expected 'trigger <vm>:<k>'");
                e.kind = sim::Scenario::Event::Kind::Trigger;
                e.irq = parse_irq_ref(ref_tok, line_no);
            } else if (what == "set-interference") {
                if (!(ls >> e.vm >> e.scale))
                    parse_fail(line_no, "expected 'set-interference <vm> <scale>'");
                e.kind = sim::Scenario::Event::Kind::SetInterference;
            } else {
                parse_fail(line_no, "unknown directive '" + what + "'");
            }
            scenario.events.push_back(e);
        } else {
            parse_fail(line_no, "unknown key '" + key + "'");
        }
    }
    return scenario;
}

sim::Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path);
    try {
        return parse_scenario(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

Overrides parse_overrides(std::istream& in) {
    Overrides overrides;
    MaskingMap map;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line))
            continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "mode") {
            int index;
            std::string kw;
            if (!(ls >> index >> kw) || kw != "mask")
                parse_fail(line_no, "expected 'mode <index> mask ...'");
            if (index != map.mode_count())
                parse_fail(line_no, "mode indices must be ascending from 0");
            std::set<IrqRef> s;
            std::string token;
            while (ls >> token) {
                if (token == "none")
                    break;
                s.insert(parse_irq_ref(token, line_no));
            }
            map.masked.push_back(std::move(s));
        } else if (key == "ctl") {
            std::string reg_tok;
            int mode;
            if (!(ls >> reg_tok >> mode))
                parse_fail(line_no, "expected 'ctl <register-hex> <mode>'");
            std::uint32_t reg = 0;
            try {
                reg = static_cast<std::uint32_t>(std::stoul(reg_tok, nullptr, 16));
            } catch (const std::exception&) {
                parse_fail(line_no, "bad register value '" + reg_tok + "'");
            }
            overrides.ctl_entries[reg] = mode;
        } else {
            parse_fail(line_no, "unknown key '" + key + "'");
        }
    }
    if (map.mode_count() > 0)
        overrides.masking = std::move(map);
    return overrides;
}

Overrides load_overrides(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path);
    try {
        return parse_overrides(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

const char* flag_name(ControlFlag cf) {
    switch (cf) {
    case ControlFlag::T0: return "T0";
    case ControlFlag::T1: return "T1";
    case ControlFlag::T2: return "T2";
    case ControlFlag::T3: return "T3";
    }
    throw std::logic_error("invalid control flag");
}

void write_report_csv(const std::string& path, const sim::RunReport& report,
                      const SystemConfig& config) {
    auto out = open_out(path);
    out << "vm,k,completions,solo_completions,rel_throughput,vm_mean_slowdown\n";
    for (const auto& row : report.tasks) {
        out << row.irq.vm << "," << row.irq.k << "," << row.completions << ",";
        if (row.solo_completions >= 0)
            out << row.solo_completions << "," << format_number(row.rel_throughput);
        else
            out << ",";
        out << "," << format_number(report.mean_slowdown.at(row.irq.vm)) << "\n";
    }
    (void)config;
}

void write_qos_csv(const std::string& path, const sim::RunReport& report) {
    auto out = open_out(path);
    out << "time_us,vm,qos,flag\n";
    for (const auto& s : report.qos_series)
        out << format_number(s.t_us) << "," << s.vm << "," << format_number(s.qos) << ","
            << flag_name(s.cf) << "\n";
}

void write_modes_csv(const std::string& path, const sim::RunReport& report) {
    auto out = open_out(path);
    out << "time_us,mode\n";
    for (const auto& [t, mode] : report.mode_series)
        out << format_number(t) << "," << mode << "\n";
}

void write_trace_csv(const std::string& path, const sim::RunReport& report) {
    auto out = open_out(path);
    out << "time_us,kind,detail\n";
    for (const auto& e : report.trace)
        out << format_number(e.t_us) << "," << e.kind << "," << e.detail << "\n";
}

} // namespace irqc::io
