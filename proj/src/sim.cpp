#include "irqc/sim.hpp"

#include "irqc/numfmt.hpp"

#include <algorithm>
#include <cmath>

namespace irqc::sim {

namespace {

constexpr double kWorkEpsilon = 1e-9;

} // namespace

double RunReport::mean_slowdown_between(VmId vm, const SystemConfig& config, double from_us,
                                        double to_us) const {
    std::size_t vm_index = 0;
    for (std::size_t i = 0; i < config.vms.size(); ++i)
        if (config.vms[i].id == vm)
            vm_index = i;
    double sum = 0.0;
    double span = 0.0;
    for (const WindowStats& w : windows) {
        if (w.t_end_us <= from_us || w.t_end_us > to_us)
            continue;
        sum += w.mean_slowdown[vm_index];
        span += 1.0;
    }
    return span > 0.0 ? sum / span : 1.0;
}

Simulator::Simulator(const SystemConfig& config, const dtt::Artifacts& artifacts,
                     const Scenario& scenario, bool rtm_enabled, bool interference_enabled,
                     double tick_us)
    : config_(config),
      scenario_(scenario),
      dist_(Distributor::from_config(config)),
      rtm_(artifacts, config_),
      rtm_enabled_(rtm_enabled),
      interference_enabled_(interference_enabled),
      tick_us_(tick_us) {
    if (tick_us_ <= 0.0)
        throw ConfigError("tick quantum must be positive");
    double ratio = config_.actuation_period_us / tick_us_;
    window_ticks_ = static_cast<std::uint64_t>(std::llround(ratio));
    if (window_ticks_ == 0 || std::abs(ratio - static_cast<double>(window_ticks_)) > 1e-9)
        throw ConfigError("actuation period must be a multiple of the tick quantum");

    max_bus_ = config_.max_bus_rate();
    for (std::size_t i = 0; i < config_.vms.size(); ++i) {
        const VmConfig& vm = config_.vms[i];
        interference_scale_[vm.id] = 1.0;
        pmu_cumulative_[vm.id] = {};
        pmu_snapshot_[vm.id] = {};
        slowdown_time_sum_[vm.id] = 0.0;
        window_slowdown_sum_[vm.id] = 0.0;
        for (int k = 0; k < vm.irq_count(); ++k) {
            TaskState task;
            task.irq = {vm.id, k};
            task.pin = vm.pins[static_cast<std::size_t>(k)];
            task.profile = vm.tasks[static_cast<std::size_t>(k)];
            tasks_.push_back(task);
            task_vm_index_.push_back(i);
            double bus_term = max_bus_ > 0.0 ? task.profile.bus_rate / max_bus_ : 0.0;
            task_contrib_.push_back(task.profile.footprint + config_.beta * bus_term);
        }
    }
    // Bring the distributor in line with the initial mode's masked set;
    // apply_mode only ever diffs between modes.
    if (rtm_enabled_) {
        for (const auto& vm : config_.vms)
            for (int k = 0; k < vm.irq_count(); ++k)
                if (artifacts.masking.is_masked(rtm_.current_mode(), {vm.id, k}))
                    dist_.disable_pin(vm.pins[static_cast<std::size_t>(k)]);
        dist_.clear_write_log();
    }

    scratch_contrib_.assign(config_.vms.size(), 0.0);
    scratch_slowdown_.assign(config_.vms.size(), 1.0);
    vm_scale_.assign(config_.vms.size(), 1.0);
    for (const auto& p : scenario_.periodics) {
        bool found = false;
        for (auto& task : tasks_) {
            if (task.irq == p.irq) {
                if (p.period_us <= 0.0)
                    throw ConfigError("periodic trigger period must be positive");
                task.period_us = p.period_us;
                task.next_trigger_us = 0.0;
                found = true;
            }
        }
        if (!found)
            throw ConfigError("scenario triggers unknown irq " + to_string(p.irq));
    }
    for (const auto& e : scenario_.events) {
        if (e.kind == Scenario::Event::Kind::Trigger) {
            if (!std::any_of(tasks_.begin(), tasks_.end(),
                             [&](const TaskState& t) { return t.irq == e.irq; }))
                throw ConfigError("scenario triggers unknown irq " + to_string(e.irq));
        } else if (!config_.find_vm(e.vm)) {
            throw ConfigError("scenario references unknown VM " + std::to_string(e.vm));
        }
    }
    std::stable_sort(scenario_.events.begin(), scenario_.events.end(),
                     [](const Scenario::Event& a, const Scenario::Event& b) {
                         return a.t_us < b.t_us;
                     });
    mode_series_.emplace_back(0.0, rtm_.current_mode());
}

void Simulator::process_events() {
    while (next_event_ < scenario_.events.size() &&
           scenario_.events[next_event_].t_us <= clock_us_ + 1e-9) {
        const auto& e = scenario_.events[next_event_++];
        if (e.kind == Scenario::Event::Kind::Trigger) {
            for (auto& task : tasks_)
                if (task.irq == e.irq)
                    task.pending = true;
        } else {
            interference_scale_[e.vm] = e.scale;
            for (std::size_t i = 0; i < config_.vms.size(); ++i)
                if (config_.vms[i].id == e.vm)
                    vm_scale_[i] = e.scale;
            trace_.push_back({clock_us_, "interference",
                              std::to_string(e.vm) + " scale=" + format_number(e.scale)});
        }
    }
}

void Simulator::fire_triggers() {
    for (auto& task : tasks_) {
        while (task.next_trigger_us <= clock_us_ + 1e-9) {
            task.pending = true;
            task.next_trigger_us += task.period_us;
        }
    }
}

void Simulator::activate_tasks() {
    for (auto& task : tasks_) {
        if (task.pending && !task.running && dist_.delivery_enabled(task.pin)) {
            task.pending = false;
            task.running = true;
            task.remaining_us = task.profile.wcet_us;
        }
    }
}

double Simulator::vm_contribution(std::size_t vm_index) const {
    const VmConfig& vm = config_.vms[vm_index];
    double sum = 0.0;
    for (std::size_t t = 0; t < tasks_.size(); ++t) {
        const TaskState& task = tasks_[t];
        if (task.irq.vm != vm.id || !task.running || !dist_.delivery_enabled(task.pin))
            continue;
        sum += task_contrib_[t];
    }
    return sum * interference_scale_.at(vm.id);
}

double Simulator::slowdown(VmId vm) const {
    if (!interference_enabled_)
        return 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < config_.vms.size(); ++i)
        if (config_.vms[i].id != vm)
            sum += vm_contribution(i);
    return 1.0 + config_.alpha * sum;
}

EventVector Simulator::pmu_window_delta(VmId vm) {
    if (tick_index_ % window_ticks_ != 0)
        throw std::logic_error("pmu_window_delta called off an actuation boundary");
    const EventVector& cum = pmu_cumulative_.at(vm);
    EventVector& snap = pmu_snapshot_.at(vm);
    EventVector delta{cum.l2 - snap.l2, cum.bus - snap.bus};
    snap = cum;
    return delta;
}

void Simulator::actuation_boundary() {
    std::map<VmId, EventVector> samples;
    for (const auto& vm : config_.vms)
        samples[vm.id] = pmu_window_delta(vm.id);

    WindowStats stats;
    stats.t_end_us = clock_us_;
    double window_us = static_cast<double>(window_ticks_) * tick_us_;
    for (const auto& vm : config_.vms) {
        stats.mean_slowdown.push_back(window_slowdown_sum_.at(vm.id) / window_us);
        window_slowdown_sum_[vm.id] = 0.0;
    }
    windows_.push_back(std::move(stats));

    if (!rtm_enabled_)
        return;
    rtm::TickResult result = rtm_.tick(samples, dist_);
    for (const auto& [vm, qos] : result.qos)
        qos_series_.push_back({clock_us_, vm, qos, result.flags.at(vm)});
    if (result.mode_changed) {
        mode_series_.emplace_back(clock_us_, result.mode);
        trace_.push_back({clock_us_, "mode", std::to_string(result.mode)});
    }
    for (const auto& w : dist_.write_log()) {
        // Single-bit writes from the RTM; decode the pin for the trace.
        std::uint32_t v = w.value;
        int bit = 0;
        while (!(v & 1u)) {
            v >>= 1;
            ++bit;
        }
        int pin = static_cast<int>(w.word) * 32 + bit;
        trace_.push_back({clock_us_, w.set ? "enable" : "disable", std::to_string(pin)});
    }
    dist_.clear_write_log();
}

void Simulator::step() {
    process_events();
    fire_triggers();
    activate_tasks();

    // Per-VM slowdown is frozen over the tick quantum.
    std::vector<double>& contrib = scratch_contrib_;
    std::fill(contrib.begin(), contrib.end(), 0.0);
    double total_contrib = 0.0;
    for (std::size_t t = 0; t < tasks_.size(); ++t) {
        const TaskState& task = tasks_[t];
        if (!task.running)
            continue;
        std::size_t word = static_cast<std::size_t>(task.pin) / 32;
        if (!((dist_.word(word) >> (task.pin % 32)) & 1u))
            continue;
        std::size_t i = task_vm_index_[t];
        double c = task_contrib_[t] * vm_scale_[i];
        contrib[i] += c;
        total_contrib += c;
    }
    std::vector<double>& s = scratch_slowdown_;
    for (std::size_t i = 0; i < config_.vms.size(); ++i)
        s[i] = interference_enabled_ ? 1.0 + config_.alpha * (total_contrib - contrib[i])
                                     : 1.0;

    std::size_t task_index = 0;
    for (std::size_t i = 0; i < config_.vms.size(); ++i) {
        const VmConfig& vm = config_.vms[i];
        EventVector& cum = pmu_cumulative_[vm.id];
        for (int k = 0; k < vm.irq_count(); ++k, ++task_index) {
            TaskState& task = tasks_[task_index];
            if (!task.running)
                continue;
            double budget = tick_us_ / s[i];
            double work = std::min(task.remaining_us, budget);
            task.remaining_us -= work;
            cum.l2 += task.profile.l2_rate * work;
            cum.bus += task.profile.bus_rate * work;
            if (task.remaining_us <= kWorkEpsilon) {
                task.remaining_us = 0.0;
                task.running = false;
                ++task.completions;
            }
        }
        slowdown_time_sum_[vm.id] += s[i] * tick_us_;
        window_slowdown_sum_[vm.id] += s[i] * tick_us_;
    }

    ++tick_index_;
    clock_us_ = static_cast<double>(tick_index_) * tick_us_;
    if (tick_index_ % window_ticks_ == 0)
        actuation_boundary();
}

void Simulator::run_for(double duration_us) {
    double ticks = duration_us / tick_us_;
    auto n = static_cast<std::uint64_t>(std::llround(ticks));
    if (std::abs(ticks - static_cast<double>(n)) > 1e-9)
        throw ConfigError("duration must be a multiple of the tick quantum");
    for (std::uint64_t i = 0; i < n; ++i)
        step();
}

std::map<VmId, double> Simulator::mean_slowdown() const {
    std::map<VmId, double> out;
    double elapsed = static_cast<double>(tick_index_) * tick_us_;
    for (const auto& [vm, sum] : slowdown_time_sum_)
        out[vm] = elapsed > 0.0 ? sum / elapsed : 1.0;
    return out;
}

RunReport run(const SystemConfig& config, const dtt::Artifacts& artifacts,
              const Scenario& scenario, const RunOptions& options) {
    Simulator simulator(config, artifacts, scenario, options.rtm_enabled, true,
                        options.tick_us);
    simulator.run_for(options.duration_us);

    RunReport report;
    report.seed = options.seed;
    for (const auto& task : simulator.tasks())
        report.tasks.push_back({task.irq, task.completions, -1, -1.0});
    report.qos_series = simulator.qos_series();
    report.mode_series = simulator.mode_series();
    report.windows = simulator.windows();
    report.mean_slowdown = simulator.mean_slowdown();
    report.trace = simulator.trace();
    report.instr = simulator.rtm().instrumentation();

    if (options.with_baseline) {
        Simulator solo(config, artifacts, scenario, false, false, options.tick_us);
        solo.run_for(options.duration_us);
        for (std::size_t i = 0; i < report.tasks.size(); ++i) {
            long base = solo.tasks()[i].completions;
            report.tasks[i].solo_completions = base;
            report.tasks[i].rel_throughput =
                base > 0 ? static_cast<double>(report.tasks[i].completions) /
                               static_cast<double>(base)
                         : 1.0;
        }
    }
    return report;
}

} // namespace irqc::sim
