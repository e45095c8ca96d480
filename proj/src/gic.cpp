#include "irqc/gic.hpp"

namespace irqc {

Distributor::Distributor(const std::map<int, VmId>& routing) : routing_(routing) {
    int max_pin = -1;
    for (const auto& [pin, vm] : routing_) {
        (void)vm;
        if (pin < 0)
            throw ConfigError("negative pin in routing");
        if (pin > max_pin)
            max_pin = pin;
    }
    enable_.assign(static_cast<std::size_t>(max_pin / 32 + 1), 0u);
    for (const auto& [pin, vm] : routing_) {
        (void)vm;
        enable_[static_cast<std::size_t>(pin) / 32] |= 1u << (pin % 32);
    }
}

Distributor Distributor::from_config(const SystemConfig& config) {
    std::map<int, VmId> routing;
    for (const auto& vm : config.vms)
        for (int pin : vm.pins)
            routing[pin] = vm.id;
    return Distributor(routing);
}

void Distributor::write_isenabler(std::size_t word, std::uint32_t value) {
    if (word >= enable_.size())
        throw ConfigError("ISENABLER word index out of range");
    enable_[word] |= value;
    write_log_.push_back({true, word, value});
}

void Distributor::write_icenabler(std::size_t word, std::uint32_t value) {
    if (word >= enable_.size())
        throw ConfigError("ICENABLER word index out of range");
    enable_[word] &= ~value;
    write_log_.push_back({false, word, value});
}

bool Distributor::delivery_enabled(int pin) const {
    check_pin(pin);
    return (enable_[static_cast<std::size_t>(pin) / 32] >> (pin % 32)) & 1u;
}

void Distributor::enable_pin(int pin) {
    check_pin(pin);
    write_isenabler(static_cast<std::size_t>(pin) / 32, 1u << (pin % 32));
}

void Distributor::disable_pin(int pin) {
    check_pin(pin);
    write_icenabler(static_cast<std::size_t>(pin) / 32, 1u << (pin % 32));
}

VmId Distributor::routed_vm(int pin) const {
    check_pin(pin);
    return routing_.at(pin);
}

std::uint32_t Distributor::word(std::size_t index) const {
    if (index >= enable_.size())
        throw ConfigError("enable word index out of range");
    return enable_[index];
}

void Distributor::check_pin(int pin) const {
    if (!routing_.count(pin))
        throw ConfigError("pin " + std::to_string(pin) + " is not routed");
}

} // namespace irqc
