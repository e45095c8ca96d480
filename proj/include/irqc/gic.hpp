#pragma once

#include "irqc/core.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace irqc {

// GICv2 distributor enable machinery. Only the enable path is modeled:
// the RTM masks and unmasks interrupts exclusively through the ISENABLER
// (write-one-to-set) and ICENABLER (write-one-to-clear) registers.
// Pin p lives in word p/32, bit p%32.
class Distributor {
public:
    struct Write {
        bool set = false;   // true: ISENABLER, false: ICENABLER
        std::size_t word = 0;
        std::uint32_t value = 0;
    };

    Distributor() = default;
    // Routing: pin -> owning VM. All routed pins start enabled.
    explicit Distributor(const std::map<int, VmId>& routing);

    static Distributor from_config(const SystemConfig& config);

    void write_isenabler(std::size_t word, std::uint32_t value);
    void write_icenabler(std::size_t word, std::uint32_t value);
    bool delivery_enabled(int pin) const;

    void enable_pin(int pin);
    void disable_pin(int pin);

    VmId routed_vm(int pin) const;
    std::size_t word_count() const { return enable_.size(); }
    std::uint32_t word(std::size_t index) const;

    const std::vector<Write>& write_log() const { return write_log_; }
    void clear_write_log() { write_log_.clear(); }

private:
    void check_pin(int pin) const;

    std::vector<std::uint32_t> enable_;
    std::map<int, VmId> routing_;
    std::vector<Write> write_log_;
};

} // namespace irqc
