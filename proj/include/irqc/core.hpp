#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace irqc {

// Thrown for malformed configurations, artifacts, and scenario files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Criticality levels, ordered so that higher value means higher criticality.
enum class Criticality : int {
    QM = 0,
    ASIL_B = 1,
    ASIL_C = 2,
    ASIL_D = 3,
};

std::string to_string(Criticality c);
Criticality criticality_from_string(const std::string& s);

using VmId = int;

// Identity of an interrupt inside the system: (vm, k). The physical pin is
// carried separately in the configuration; routing identity is (pin, vm).
struct IrqRef {
    VmId vm = 0;
    int k = 0;

    auto operator<=>(const IrqRef&) const = default;
};

std::string to_string(const IrqRef& irq);

// Microarchitectural event counts over exactly one actuation window.
struct EventVector {
    double l2 = 0.0;
    double bus = 0.0;

    bool operator==(const EventVector&) const = default;
};

// Weights of the two PMU events in the QoS weighted average.
struct Weights {
    double l2 = 0.5;
    double bus = 0.5;

    bool valid() const;
};

// 2-bit QoS band. T0 is the best band, T3 the worst.
enum class ControlFlag : unsigned {
    T0 = 0,
    T1 = 1,
    T2 = 2,
    T3 = 3,
};

// Aggregated control flags, one per non-QM VM, in layout order
// (descending criticality, then ascending VM id). Entry j occupies
// bits [2j, 2j+1] of the packed value.
struct ControlRegister {
    std::vector<std::pair<VmId, ControlFlag>> flags;

    std::uint32_t packed() const;
};

// Layout order of the control register for a given system.
// Returns the non-QM VM ids, descending criticality then ascending id.
struct SystemConfig;
std::vector<VmId> register_layout(const SystemConfig& config);

ControlRegister unpack_register(std::uint32_t value, const std::vector<VmId>& layout);

// Per degradation mode, the set of IRQs that are masked in that mode.
// Mode 0 is the least degraded mode; the last mode is fail-safe.
struct MaskingMap {
    std::vector<std::set<IrqRef>> masked;

    int mode_count() const { return static_cast<int>(masked.size()); }
    bool is_masked(int mode, const IrqRef& irq) const;
};

// Static profile of one interrupt-driven task, measured solo.
struct TaskProfile {
    double footprint = 0.0;   // fraction of the LLC the task touches
    double l2_rate = 0.0;     // L2 accesses per microsecond, solo
    double bus_rate = 0.0;    // bus accesses per microsecond, solo
    double period_us = 0.0;   // nominal activation period
    double wcet_us = 0.0;     // solo execution time per activation
};

struct VmConfig {
    VmId id = 0;
    Criticality level = Criticality::QM;
    std::vector<int> pins;             // pin of IRQ k, indexed by k
    std::vector<TaskProfile> tasks;    // profile of IRQ k, indexed by k
    // Explicit interference-free reference per actuation window; when absent
    // it is derived from the task profiles.
    std::optional<EventVector> reference;

    int irq_count() const { return static_cast<int>(pins.size()); }
};

struct SystemConfig {
    std::vector<VmConfig> vms;
    Weights weights;
    double actuation_period_us = 100.0;
    int mode_count = 2;
    double alpha = 0.0;        // contention model gain
    double beta = 0.0;         // weight of normalized bus rate
    double llc_bytes = 1 << 20;
    bool stepwise = true;

    const VmConfig& vm(VmId id) const;
    const VmConfig* find_vm(VmId id) const;
    VmId asil_d_vm() const;
    double max_bus_rate() const;
    // Interference-free expected events of one VM per actuation window:
    // the explicit reference when present, otherwise sum over tasks of
    // rate x duty cycle x actuation period.
    EventVector solo_reference(VmId id) const;

    // Throws ConfigError on violated invariants (exactly one ASIL-D VM,
    // unique pins, positive periods, valid weights, mode_count >= 2, ...).
    void validate() const;
};

} // namespace irqc
