#include "irqc/rtm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace irqc::rtm {

namespace {

class ScopedTimer {
public:
    ScopedTimer(Instrumentation& instr, int mp) : instr_(instr), mp_(mp) {
        start_ = std::chrono::steady_clock::now();
    }
    ~ScopedTimer() {
        auto end = std::chrono::steady_clock::now();
        instr_.record(mp_, std::chrono::duration<double, std::micro>(end - start_).count());
    }

private:
    Instrumentation& instr_;
    int mp_;
    std::chrono::steady_clock::time_point start_;
};

double clamped_ratio(double actual, double expected) {
    if (expected == 0.0)
        return 1.0;
    return std::clamp(actual / expected, 0.0, 1.0);
}

} // namespace

double compute_qos(const EventVector& actual, const EventVector& expected,
                   const Weights& weights) {
    if (actual.l2 < 0.0 || actual.bus < 0.0 || expected.l2 < 0.0 || expected.bus < 0.0)
        throw std::invalid_argument("event counts must be non-negative");
    double r_l2 = clamped_ratio(actual.l2, expected.l2);
    double r_bus = clamped_ratio(actual.bus, expected.bus);
    return 100.0 * (weights.l2 * r_l2 + weights.bus * r_bus);
}

ControlFlag decode_qos(double qos) {
    if (qos < 0.0 || qos > 100.0)
        throw std::invalid_argument("qos must be in [0,100]");
    if (qos >= 75.0)
        return ControlFlag::T0;
    if (qos >= 50.0)
        return ControlFlag::T1;
    if (qos >= 25.0)
        return ControlFlag::T2;
    return ControlFlag::T3;
}

std::uint32_t aggregate_register(const std::vector<std::pair<VmId, ControlFlag>>& flags,
                                 const std::vector<VmId>& layout) {
    if (flags.size() != layout.size())
        throw std::invalid_argument("one flag per non-QM VM required");
    ControlRegister reg;
    for (std::size_t j = 0; j < layout.size(); ++j) {
        auto it = std::find_if(flags.begin(), flags.end(),
                               [&](const auto& f) { return f.first == layout[j]; });
        if (it == flags.end())
            throw std::invalid_argument("missing flag for VM " + std::to_string(layout[j]));
        reg.flags.emplace_back(layout[j], it->second);
    }
    return reg.packed();
}

int compute_dm(std::uint32_t reg, const dtt::ControlTable& table, int current_mode,
               bool stepwise) {
    int target = table.lookup(reg);
    if (!stepwise)
        return target;
    if (target > current_mode)
        return current_mode + 1;
    if (target < current_mode)
        return current_mode - 1;
    return current_mode;
}

double overhead_model(double worst_case_us, double period_us) {
    if (period_us <= 0.0)
        throw std::invalid_argument("period must be positive");
    return 100.0 * worst_case_us / period_us;
}

const char* measuring_point_name(int mp) {
    switch (mp) {
    case MP_PMU_SAMPLING: return "pmu_sampling";
    case MP_QOS_COMPUTE: return "qos_compute";
    case MP_QOS_DECODE: return "qos_decode";
    case MP_VM_SYNC: return "vm_sync";
    case MP_CONTROL_LOGIC: return "control_logic";
    case MP_REFERENCE_UPDATE: return "reference_update";
    case MP_IRQ_MASKING: return "irq_masking";
    default: throw std::invalid_argument("unknown measuring point");
    }
}

void Instrumentation::record(int mp, double duration_us) {
    Point& p = points.at(static_cast<std::size_t>(mp));
    ++p.count;
    p.sum_us += duration_us;
    p.max_us = std::max(p.max_us, duration_us);
    ++total.count;
    total.sum_us += duration_us;
    total.max_us = std::max(total.max_us, duration_us);
}

Rtm::Rtm(dtt::Artifacts artifacts, const SystemConfig& config)
    : artifacts_(std::move(artifacts)), config_(&config) {
    config.validate();
    dtt::validate_artifacts(artifacts_, config);
    layout_ = register_layout(config);
    stepwise_ = config.stepwise;
    auto effects = dtt::compute_effects(config);
    for (std::size_t i = 0; i < effects.size(); ++i)
        effect_rank_[effects[i].irq] = static_cast<int>(i);
    for (const auto& vm : config.vms)
        for (int k = 0; k < vm.irq_count(); ++k)
            pins_[{vm.id, k}] = vm.pins[static_cast<std::size_t>(k)];
    expected_ = artifacts_.references;
}

int Rtm::pin_of(const IrqRef& irq) const {
    auto it = pins_.find(irq);
    if (it == pins_.end())
        throw ConfigError("irq " + to_string(irq) + " is not routed");
    return it->second;
}

void Rtm::apply_mode(int mode, Distributor& distributor) {
    if (mode < 0 || mode >= artifacts_.masking.mode_count())
        throw std::invalid_argument("degradation mode out of range");
    const auto& s_new = artifacts_.masking.masked[static_cast<std::size_t>(mode)];
    const auto& s_old = artifacts_.masking.masked[static_cast<std::size_t>(current_mode_)];

    std::vector<IrqRef> to_mask;
    for (const IrqRef& irq : s_new)
        if (!s_old.count(irq))
            to_mask.push_back(irq);
    std::vector<IrqRef> to_unmask;
    for (const IrqRef& irq : s_old)
        if (!s_new.count(irq))
            to_unmask.push_back(irq);

    auto rank = [this](const IrqRef& irq) {
        auto it = effect_rank_.find(irq);
        return it != effect_rank_.end() ? it->second : static_cast<int>(effect_rank_.size());
    };
    // Mask highest-effect IRQs first; restore in reverse order.
    std::sort(to_mask.begin(), to_mask.end(),
              [&](const IrqRef& a, const IrqRef& b) { return rank(a) < rank(b); });
    std::sort(to_unmask.begin(), to_unmask.end(),
              [&](const IrqRef& a, const IrqRef& b) { return rank(a) > rank(b); });

    for (const IrqRef& irq : to_mask)
        distributor.disable_pin(pin_of(irq));
    for (const IrqRef& irq : to_unmask)
        distributor.enable_pin(pin_of(irq));
    current_mode_ = mode;
}

void Rtm::update_references(int mode) {
    if (mode < 0 || mode >= artifacts_.masking.mode_count())
        throw std::invalid_argument("degradation mode out of range");
    for (VmId id : layout_) {
        const VmConfig& vm = config_->vm(id);
        EventVector expected;
        for (int k = 0; k < vm.irq_count(); ++k) {
            if (artifacts_.masking.is_masked(mode, {id, k}))
                continue;
            const TaskProfile& t = vm.tasks[static_cast<std::size_t>(k)];
            double duty = std::min(1.0, t.wcet_us / t.period_us);
            expected.l2 += t.l2_rate * duty * artifacts_.actuation_period_us;
            expected.bus += t.bus_rate * duty * artifacts_.actuation_period_us;
        }
        expected_[id] = expected;
    }
}

int Rtm::control_step(std::uint32_t reg, Distributor& distributor) {
    int mode;
    {
        ScopedTimer t(instr_, MP_CONTROL_LOGIC);
        mode = compute_dm(reg, artifacts_.control, current_mode_, stepwise_);
    }
    last_register_ = reg;
    {
        ScopedTimer t(instr_, MP_REFERENCE_UPDATE);
        update_references(mode);
    }
    {
        ScopedTimer t(instr_, MP_IRQ_MASKING);
        apply_mode(mode, distributor);
    }
    return mode;
}

TickResult Rtm::tick(const std::map<VmId, EventVector>& samples, Distributor& distributor) {
    TickResult result;
    std::vector<std::pair<VmId, ControlFlag>> flags;

    for (const auto& vm : config_->vms) {
        if (vm.level == Criticality::QM)
            continue;
        EventVector sample;
        {
            ScopedTimer t(instr_, MP_PMU_SAMPLING);
            auto it = samples.find(vm.id);
            if (it == samples.end())
                throw std::invalid_argument("missing PMU sample for VM " +
                                            std::to_string(vm.id));
            sample = it->second;
        }
        double qos;
        {
            ScopedTimer t(instr_, MP_QOS_COMPUTE);
            qos = compute_qos(sample, expected_.at(vm.id), artifacts_.weights);
        }
        ControlFlag cf;
        {
            ScopedTimer t(instr_, MP_QOS_DECODE);
            cf = decode_qos(qos);
        }
        result.qos[vm.id] = qos;
        result.flags[vm.id] = cf;
        flags.emplace_back(vm.id, cf);
    }

    std::uint32_t reg;
    {
        // Barrier between per-VM Stage 1 results and the ASIL-D Stage 2;
        // single-threaded here, so the synchronization itself is a no-op.
        ScopedTimer t(instr_, MP_VM_SYNC);
        reg = aggregate_register(flags, layout_);
    }
    int before = current_mode_;
    result.mode = control_step(reg, distributor);
    result.control_register = reg;
    result.mode_changed = result.mode != before;
    return result;
}

} // namespace irqc::rtm
