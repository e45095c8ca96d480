#pragma once

#include "irqc/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace irqc::dtt {

// Per-IRQ degradation effect: footprint + beta x normalized bus rate.
// Higher effect means the IRQ is masked earlier.
struct DegradationEffect {
    IrqRef irq;
    double effect = 0.0;
};

// Mapping from packed control register values to degradation modes.
// When default_d is set, uncovered registers fall back to the D-flag rule
// mode = min(cf_D, mode_count - 1); explicit entries override it.
struct ControlTable {
    int mode_count = 2;
    bool default_d = true;
    std::map<std::uint32_t, int> entries;

    int lookup(std::uint32_t reg) const;
    // Total over all 4^num_flags register values.
    bool total(int num_flags) const;
};

// Witness for a control-table monotonicity violation: two registers that
// differ only in the ASIL-D flag but map to out-of-order modes.
struct MonotonicityViolation {
    std::uint32_t lower = 0;
    std::uint32_t higher = 0;
};

// Checks that mode is non-decreasing in cf_D (bits 0-1) with all other
// flags fixed, over all 4^num_flags registers.
std::optional<MonotonicityViolation> check_monotone(const ControlTable& table, int num_flags);

struct Violation {
    enum class Kind { Nesting, AsilDMasked, FailSafeIncomplete, UnknownIrq };
    Kind kind;
    int mode = 0;
    IrqRef irq;

    std::string describe() const;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

// Everything the RTM consumes at run time.
struct Artifacts {
    double actuation_period_us = 0.0;
    Weights weights;
    std::map<VmId, EventVector> references;   // one per non-QM VM
    MaskingMap masking;
    ControlTable control;
};

std::vector<DegradationEffect> compute_effects(const SystemConfig& config);

MaskingMap generate_masking_map(const SystemConfig& config,
                                const std::vector<DegradationEffect>& effects);

ValidationReport validate_masking_map(const MaskingMap& map, const SystemConfig& config);

ControlTable generate_control_table(const SystemConfig& config);

ValidationReport validate_artifacts(const Artifacts& artifacts, const SystemConfig& config);

Artifacts build_artifacts(const SystemConfig& config, const MaskingMap& masking,
                          const ControlTable& control);

// Line-oriented artifact file. Byte-stable: exporting the same Artifacts
// twice yields identical bytes, and export -> import is the identity.
std::string serialize_artifacts(const Artifacts& artifacts);
Artifacts parse_artifacts(std::istream& in);

void export_artifacts(const Artifacts& artifacts, const SystemConfig& config,
                      const std::string& path);
Artifacts import_artifacts(const std::string& path);

} // namespace irqc::dtt
