#include "irqc/dtt.hpp"

#include "irqc/numfmt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace irqc::dtt {

namespace {

std::uint32_t pow4(int n) {
    return 1u << (2 * n);
}

std::set<IrqRef> all_maskable_irqs(const SystemConfig& config) {
    std::set<IrqRef> irqs;
    for (const auto& vm : config.vms) {
        if (vm.level == Criticality::ASIL_D)
            continue;
        for (int k = 0; k < vm.irq_count(); ++k)
            irqs.insert({vm.id, k});
    }
    return irqs;
}

} // namespace

int ControlTable::lookup(std::uint32_t reg) const {
    auto it = entries.find(reg);
    if (it != entries.end())
        return it->second;
    if (!default_d)
        throw ConfigError("control table has no entry for register " + std::to_string(reg));
    int cf_d = static_cast<int>(reg & 0x3u);
    return std::min(cf_d, mode_count - 1);
}

bool ControlTable::total(int num_flags) const {
    if (default_d)
        return true;
    for (std::uint32_t reg = 0; reg < pow4(num_flags); ++reg)
        if (!entries.count(reg))
            return false;
    return true;
}

std::optional<MonotonicityViolation> check_monotone(const ControlTable& table, int num_flags) {
    for (std::uint32_t rest = 0; rest < pow4(num_flags) / 4; ++rest) {
        int prev_mode = -1;
        std::uint32_t prev_reg = 0;
        for (std::uint32_t cf_d = 0; cf_d < 4; ++cf_d) {
            std::uint32_t reg = (rest << 2) | cf_d;
            int mode = table.lookup(reg);
            if (mode < prev_mode)
                return MonotonicityViolation{prev_reg, reg};
            prev_mode = mode;
            prev_reg = reg;
        }
    }
    return std::nullopt;
}

std::string Violation::describe() const {
    switch (kind) {
    case Kind::Nesting:
        return "mode " + std::to_string(mode) + " does not contain " + to_string(irq) +
               " masked in mode " + std::to_string(mode - 1);
    case Kind::AsilDMasked:
        return "mode " + std::to_string(mode) + " masks ASIL-D irq " + to_string(irq);
    case Kind::FailSafeIncomplete:
        return "fail-safe mode does not mask " + to_string(irq);
    case Kind::UnknownIrq:
        return "mode " + std::to_string(mode) + " masks unknown irq " + to_string(irq);
    }
    return "unknown violation";
}

std::vector<DegradationEffect> compute_effects(const SystemConfig& config) {
    double max_bus = config.max_bus_rate();
    std::vector<DegradationEffect> effects;
    for (const auto& vm : config.vms) {
        if (vm.level == Criticality::ASIL_D)
            continue;
        for (int k = 0; k < vm.irq_count(); ++k) {
            const TaskProfile& t = vm.tasks[static_cast<std::size_t>(k)];
            double bus_term = max_bus > 0.0 ? t.bus_rate / max_bus : 0.0;
            effects.push_back({{vm.id, k}, t.footprint + config.beta * bus_term});
        }
    }
    std::sort(effects.begin(), effects.end(),
              [&](const DegradationEffect& a, const DegradationEffect& b) {
                  if (a.effect != b.effect)
                      return a.effect > b.effect;
                  auto la = config.vm(a.irq.vm).level;
                  auto lb = config.vm(b.irq.vm).level;
                  if (la != lb)
                      return la < lb;
                  return a.irq < b.irq;
              });
    return effects;
}

MaskingMap generate_masking_map(const SystemConfig& config,
                                const std::vector<DegradationEffect>& effects) {
    if (config.mode_count < 2)
        throw ConfigError("mode_count must be at least 2");
    MaskingMap map;
    map.masked.resize(static_cast<std::size_t>(config.mode_count));

    int intermediate = config.mode_count - 2;
    std::size_t total = effects.size();
    if (intermediate > 0 && total > 0) {
        std::size_t chunk = (total + static_cast<std::size_t>(intermediate) - 1) /
                            static_cast<std::size_t>(intermediate);
        for (int m = 1; m <= intermediate; ++m) {
            std::size_t take = std::min(total, chunk * static_cast<std::size_t>(m));
            auto& s = map.masked[static_cast<std::size_t>(m)];
            for (std::size_t i = 0; i < take; ++i)
                s.insert(effects[i].irq);
        }
    }
    map.masked.back() = all_maskable_irqs(config);
    return map;
}

ValidationReport validate_masking_map(const MaskingMap& map, const SystemConfig& config) {
    ValidationReport report;
    VmId asil_d = config.asil_d_vm();
    for (int m = 0; m < map.mode_count(); ++m) {
        const auto& s = map.masked[static_cast<std::size_t>(m)];
        for (const IrqRef& irq : s) {
            const VmConfig* vm = config.find_vm(irq.vm);
            if (!vm || irq.k < 0 || irq.k >= vm->irq_count()) {
                report.violations.push_back({Violation::Kind::UnknownIrq, m, irq});
                continue;
            }
            if (irq.vm == asil_d)
                report.violations.push_back({Violation::Kind::AsilDMasked, m, irq});
        }
        if (m > 0)
            for (const IrqRef& irq : map.masked[static_cast<std::size_t>(m - 1)])
                if (!s.count(irq))
                    report.violations.push_back({Violation::Kind::Nesting, m, irq});
    }
    if (map.mode_count() > 0) {
        const auto& fail_safe = map.masked.back();
        for (const IrqRef& irq : all_maskable_irqs(config))
            if (!fail_safe.count(irq))
                report.violations.push_back(
                    {Violation::Kind::FailSafeIncomplete, map.mode_count() - 1, irq});
    }
    return report;
}

ControlTable generate_control_table(const SystemConfig& config) {
    if (config.mode_count < 2)
        throw ConfigError("mode_count must be at least 2");
    ControlTable table;
    table.mode_count = config.mode_count;
    table.default_d = true;
    return table;
}

ValidationReport validate_artifacts(const Artifacts& artifacts, const SystemConfig& config) {
    ValidationReport report = validate_masking_map(artifacts.masking, config);
    if (artifacts.masking.mode_count() != config.mode_count)
        throw ConfigError("artifact mode count does not match config");
    if (artifacts.actuation_period_us <= 0.0)
        throw ConfigError("artifact actuation period must be positive");
    if (!artifacts.weights.valid())
        throw ConfigError("artifact weights must be non-negative and sum to 1");
    auto layout = register_layout(config);
    for (VmId id : layout)
        if (!artifacts.references.count(id))
            throw ConfigError("artifact misses reference for VM " + std::to_string(id));
    if (artifacts.references.size() != layout.size())
        throw ConfigError("artifact has references for non-existent or QM VMs");
    int num_flags = static_cast<int>(layout.size());
    if (!artifacts.control.total(num_flags))
        throw ConfigError("control table is not total over the register space");
    if (auto witness = check_monotone(artifacts.control, num_flags))
        throw ConfigError("control table not monotone in cf_D: registers " +
                          std::to_string(witness->lower) + " and " +
                          std::to_string(witness->higher));
    return report;
}

Artifacts build_artifacts(const SystemConfig& config, const MaskingMap& masking,
                          const ControlTable& control) {
    Artifacts artifacts;
    artifacts.actuation_period_us = config.actuation_period_us;
    artifacts.weights = config.weights;
    for (VmId id : register_layout(config))
        artifacts.references[id] = config.solo_reference(id);
    artifacts.masking = masking;
    artifacts.control = control;
    return artifacts;
}

std::string serialize_artifacts(const Artifacts& artifacts) {
    std::ostringstream out;
    out << "version 1\n";
    out << "period " << format_number(artifacts.actuation_period_us) << "\n";
    out << "weights " << format_number(artifacts.weights.l2) << " "
        << format_number(artifacts.weights.bus) << "\n";
    for (const auto& [vm, ref] : artifacts.references)
        out << "ref " << vm << " " << format_number(ref.l2) << " " << format_number(ref.bus)
            << "\n";
    for (int m = 0; m < artifacts.masking.mode_count(); ++m) {
        out << "mode " << m << " mask";
        const auto& s = artifacts.masking.masked[static_cast<std::size_t>(m)];
        if (s.empty()) {
            out << " none";
        } else {
            for (const IrqRef& irq : s)
                out << " " << to_string(irq);
        }
        out << "\n";
    }
    if (artifacts.control.default_d)
        out << "ctl default-d\n";
    for (const auto& [reg, mode] : artifacts.control.entries) {
        out << "ctl " << std::hex << reg << std::dec << " " << mode << "\n";
    }
    return out.str();
}

namespace {

[[noreturn]] void parse_fail(int line_no, const std::string& msg) {
    throw ConfigError("artifact line " + std::to_string(line_no) + ": " + msg);
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

} // namespace

Artifacts parse_artifacts(std::istream& in) {
    Artifacts artifacts;
    artifacts.control.default_d = false;
    std::string line;
    int line_no = 0;
    int next_mode = 0;
    bool saw_version = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "version") {
            int v = 0;
            ls >> v;
            if (v != 1)
                parse_fail(line_no, "unsupported version");
            saw_version = true;
        } else if (key == "period") {
            if (!(ls >> artifacts.actuation_period_us))
                parse_fail(line_no, "bad period");
        } else if (key == "weights") {
            if (!(ls >> artifacts.weights.l2 >> artifacts.weights.bus))
                parse_fail(line_no, "bad weights");
        } else if (key == "ref") {
            VmId vm;
            EventVector ref;
            if (!(ls >> vm >> ref.l2 >> ref.bus))
                parse_fail(line_no, "bad reference line");
            artifacts.references[vm] = ref;
        } else if (key == "mode") {
            int index;
            std::string mask_kw;
            if (!(ls >> index >> mask_kw) || mask_kw != "mask")
                parse_fail(line_no, "expected 'mode <index> mask ...'");
            if (index != next_mode)
                parse_fail(line_no, "mode indices must be ascending from 0");
            ++next_mode;
            std::set<IrqRef> s;
            std::string token;
            while (ls >> token) {
                if (token == "none")
                    break;
                s.insert(parse_irq_ref(token, line_no));
            }
            artifacts.masking.masked.push_back(std::move(s));
        } else if (key == "ctl") {
            std::string first;
            if (!(ls >> first))
                parse_fail(line_no, "bad ctl line");
            if (first == "default-d") {
                artifacts.control.default_d = true;
            } else {
                int mode;
                if (!(ls >> mode))
                    parse_fail(line_no, "bad ctl line");
                std::uint32_t reg = 0;
                try {
                    reg = static_cast<std::uint32_t>(std::stoul(first, nullptr, 16));
                } catch (const std::exception&) {
                    parse_fail(line_no, "bad register value '" + first + "'");
                }
                artifacts.control.entries[reg] = mode;
            }
        } else {
            parse_fail(line_no, "unknown key '" + key + "'");
        }
    }
    if (!saw_version)
        throw ConfigError("artifact file misses 'version 1' line");
    if (artifacts.masking.mode_count() < 2)
        throw ConfigError("artifact must define at least two modes");
    artifacts.control.mode_count = artifacts.masking.mode_count();
    return artifacts;
}

void export_artifacts(const Artifacts& artifacts, const SystemConfig& config,
                      const std::string& path) {
    ValidationReport report = validate_artifacts(artifacts, config);
    if (!report.ok()) {
        std::string msg = "refusing to export invalid artifacts:";
        for (const auto& v : report.violations)
            msg += "\n  " + v.describe();
        throw ConfigError(msg);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open " + path + " for writing");
    out << serialize_artifacts(artifacts);
    if (!out)
        throw ConfigError("write to " + path + " failed");
}

Artifacts import_artifacts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path);
    return parse_artifacts(in);
}

} // namespace irqc::dtt
