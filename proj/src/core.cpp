#include "irqc/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace irqc {

std::string to_string(Criticality c) {
    switch (c) {
    case Criticality::ASIL_D: return "ASIL_D";
    case Criticality::ASIL_C: return "ASIL_C";
    case Criticality::ASIL_B: return "ASIL_B";
    case Criticality::QM: return "QM";
    }
    throw std::logic_error("invalid criticality value");
}

Criticality criticality_from_string(const std::string& s) {
    if (s == "ASIL_D") return Criticality::ASIL_D;
    if (s == "ASIL_C") return Criticality::ASIL_C;
    if (s == "ASIL_B") return Criticality::ASIL_B;
    if (s == "QM") return Criticality::QM;
    throw ConfigError("unknown criticality level: " + s);
}

std::string to_string(const IrqRef& irq) {
    return std::to_string(irq.vm) + ":" + std::to_string(irq.k);
}

bool Weights::valid() const {
    return l2 >= 0.0 && bus >= 0.0 && std::abs(l2 + bus - 1.0) <= 1e-9;
}

std::uint32_t ControlRegister::packed() const {
    std::uint32_t value = 0;
    for (std::size_t j = 0; j < flags.size(); ++j)
        value |= static_cast<std::uint32_t>(flags[j].second) << (2 * j);
    return value;
}

std::vector<VmId> register_layout(const SystemConfig& config) {
    std::vector<VmId> layout;
    for (const auto& vm : config.vms)
        if (vm.level != Criticality::QM)
            layout.push_back(vm.id);
    std::sort(layout.begin(), layout.end(), [&](VmId a, VmId b) {
        auto la = config.vm(a).level;
        auto lb = config.vm(b).level;
        if (la != lb) return la > lb;
        return a < b;
    });
    return layout;
}

ControlRegister unpack_register(std::uint32_t value, const std::vector<VmId>& layout) {
    ControlRegister reg;
    for (std::size_t j = 0; j < layout.size(); ++j)
        reg.flags.emplace_back(layout[j], static_cast<ControlFlag>((value >> (2 * j)) & 0x3u));
    if (value >> (2 * layout.size()))
        throw std::invalid_argument("register value has bits beyond the layout");
    return reg;
}

bool MaskingMap::is_masked(int mode, const IrqRef& irq) const {
    if (mode < 0 || mode >= mode_count())
        throw std::invalid_argument("mode index out of range");
    return masked[static_cast<std::size_t>(mode)].count(irq) > 0;
}

const VmConfig& SystemConfig::vm(VmId id) const {
    const VmConfig* p = find_vm(id);
    if (!p)
        throw ConfigError("unknown VM id: " + std::to_string(id));
    return *p;
}

const VmConfig* SystemConfig::find_vm(VmId id) const {
    for (const auto& v : vms)
        if (v.id == id)
            return &v;
    return nullptr;
}

VmId SystemConfig::asil_d_vm() const {
    for (const auto& v : vms)
        if (v.level == Criticality::ASIL_D)
            return v.id;
    throw ConfigError("no ASIL-D VM configured");
}

double SystemConfig::max_bus_rate() const {
    double m = 0.0;
    for (const auto& v : vms)
        for (const auto& t : v.tasks)
            m = std::max(m, t.bus_rate);
    return m;
}

EventVector SystemConfig::solo_reference(VmId id) const {
    const VmConfig& v = vm(id);
    if (v.reference)
        return *v.reference;
    EventVector ref;
    for (const auto& t : v.tasks) {
        double duty = t.period_us > 0.0 ? std::min(1.0, t.wcet_us / t.period_us) : 0.0;
        ref.l2 += t.l2_rate * duty * actuation_period_us;
        ref.bus += t.bus_rate * duty * actuation_period_us;
    }
    return ref;
}

void SystemConfig::validate() const {
    if (vms.empty())
        throw ConfigError("config has no VMs");
    if (actuation_period_us <= 0.0)
        throw ConfigError("actuation period must be positive");
    if (mode_count < 2)
        throw ConfigError("mode_count must be at least 2");
    if (!weights.valid())
        throw ConfigError("event weights must be non-negative and sum to 1");
    if (alpha < 0.0 || beta < 0.0)
        throw ConfigError("interference parameters must be non-negative");

    int asil_d = 0;
    std::set<VmId> ids;
    std::set<int> pins;
    for (const auto& v : vms) {
        if (!ids.insert(v.id).second)
            throw ConfigError("duplicate VM id: " + std::to_string(v.id));
        if (v.level == Criticality::ASIL_D)
            ++asil_d;
        if (v.pins.size() != v.tasks.size())
            throw ConfigError("VM " + std::to_string(v.id) + " has mismatched irq/task lists");
        for (int pin : v.pins)
            if (!pins.insert(pin).second)
                throw ConfigError("pin " + std::to_string(pin) + " routed twice");
        for (const auto& t : v.tasks) {
            if (t.footprint < 0.0 || t.footprint > 1.0)
                throw ConfigError("footprint fraction must be in [0,1]");
            if (t.l2_rate < 0.0 || t.bus_rate < 0.0)
                throw ConfigError("event rates must be non-negative");
            if (t.period_us <= 0.0 || t.wcet_us <= 0.0)
                throw ConfigError("task period and wcet must be positive");
        }
    }
    if (asil_d != 1)
        throw ConfigError("exactly one VM must have level ASIL_D");
}

} // namespace irqc
