#pragma once

#include "irqc/core.hpp"
#include "irqc/dtt.hpp"
#include "irqc/sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace irqc::io {

// System configuration, line-oriented text (grammar in docs/formats.md).
SystemConfig parse_config(std::istream& in);
SystemConfig load_config(const std::string& path);

sim::Scenario parse_scenario(std::istream& in);
sim::Scenario load_scenario(const std::string& path);

// User overrides for the DTT: an optional full masking map and optional
// control-table entries layered on top of the generated defaults.
struct Overrides {
    std::optional<MaskingMap> masking;
    std::map<std::uint32_t, int> ctl_entries;
};

Overrides parse_overrides(std::istream& in);
Overrides load_overrides(const std::string& path);

const char* flag_name(ControlFlag cf);

void write_report_csv(const std::string& path, const sim::RunReport& report,
                      const SystemConfig& config);
void write_qos_csv(const std::string& path, const sim::RunReport& report);
void write_modes_csv(const std::string& path, const sim::RunReport& report);
void write_trace_csv(const std::string& path, const sim::RunReport& report);

} // namespace irqc::io
