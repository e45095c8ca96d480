#pragma once

#include "irqc/core.hpp"
#include "irqc/dtt.hpp"
#include "irqc/gic.hpp"
#include "irqc/rtm.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace irqc::sim {

// Activation schedule and interference script for a run. Tasks are
// triggered only by the scenario; the config carries the static profiles.
struct Scenario {
    struct Periodic {
        IrqRef irq;
        double period_us = 0.0;
    };
    struct Event {
        enum class Kind { Trigger, SetInterference };
        double t_us = 0.0;
        Kind kind = Kind::Trigger;
        IrqRef irq;        // Trigger
        VmId vm = 0;       // SetInterference
        double scale = 1.0;
    };

    std::vector<Periodic> periodics;
    std::vector<Event> events;   // kept sorted by t_us
};

struct TaskState {
    IrqRef irq;
    int pin = 0;
    TaskProfile profile;
    bool running = false;
    bool pending = false;
    double remaining_us = 0.0;   // solo-equivalent work left
    double next_trigger_us = std::numeric_limits<double>::infinity();
    double period_us = 0.0;      // 0 when not periodic
    long completions = 0;
};

struct QosSample {
    double t_us = 0.0;
    VmId vm = 0;
    double qos = 0.0;
    ControlFlag cf = ControlFlag::T0;
};

struct TraceEvent {
    double t_us = 0.0;
    std::string kind;
    std::string detail;
};

// Per-actuation-window statistics; mean_slowdown is indexed by VM position
// in the config.
struct WindowStats {
    double t_end_us = 0.0;
    std::vector<double> mean_slowdown;
};

struct RunReport {
    struct TaskRow {
        IrqRef irq;
        long completions = 0;
        long solo_completions = -1;       // -1 when no baseline was run
        double rel_throughput = -1.0;
    };

    std::vector<TaskRow> tasks;
    std::vector<QosSample> qos_series;
    std::vector<std::pair<double, int>> mode_series;
    std::vector<WindowStats> windows;
    std::map<VmId, double> mean_slowdown;  // over the whole run
    std::vector<TraceEvent> trace;
    rtm::Instrumentation instr;
    std::uint64_t seed = 0;

    double mean_slowdown_between(VmId vm, const SystemConfig& config, double from_us,
                                 double to_us) const;
};

struct RunOptions {
    double duration_us = 0.0;
    std::uint64_t seed = 0;
    bool rtm_enabled = true;
    bool with_baseline = false;   // adds a solo run for relative throughput
    double tick_us = 1.0;
};

class Simulator {
public:
    // interference_enabled=false zeroes the contention model (solo runs).
    Simulator(const SystemConfig& config, const dtt::Artifacts& artifacts,
              const Scenario& scenario, bool rtm_enabled, bool interference_enabled = true,
              double tick_us = 1.0);

    void step();
    void run_for(double duration_us);

    double clock_us() const { return clock_us_; }
    double slowdown(VmId vm) const;
    // Window PMU delta for one VM; only valid exactly at actuation
    // boundaries. Advances the per-VM snapshot.
    EventVector pmu_window_delta(VmId vm);

    const std::vector<TaskState>& tasks() const { return tasks_; }
    const Distributor& distributor() const { return dist_; }
    const rtm::Rtm& rtm() const { return rtm_; }
    const std::vector<QosSample>& qos_series() const { return qos_series_; }
    const std::vector<std::pair<double, int>>& mode_series() const { return mode_series_; }
    const std::vector<WindowStats>& windows() const { return windows_; }
    const std::vector<TraceEvent>& trace() const { return trace_; }
    std::map<VmId, double> mean_slowdown() const;

private:
    void process_events();
    void fire_triggers();
    void activate_tasks();
    double vm_contribution(std::size_t vm_index) const;
    void actuation_boundary();

    SystemConfig config_;
    Scenario scenario_;
    // Per-task caches for the hot per-tick loop.
    double max_bus_ = 0.0;
    std::vector<std::size_t> task_vm_index_;
    std::vector<double> task_contrib_;
    std::vector<double> scratch_contrib_;
    std::vector<double> scratch_slowdown_;
    std::vector<double> vm_scale_;
    Distributor dist_;
    rtm::Rtm rtm_;
    bool rtm_enabled_;
    bool interference_enabled_;
    double tick_us_;
    std::uint64_t tick_index_ = 0;
    std::uint64_t window_ticks_ = 0;
    double clock_us_ = 0.0;

    std::vector<TaskState> tasks_;
    std::size_t next_event_ = 0;
    std::map<VmId, double> interference_scale_;
    std::map<VmId, EventVector> pmu_cumulative_;
    std::map<VmId, EventVector> pmu_snapshot_;
    std::map<VmId, double> slowdown_time_sum_;       // whole run
    std::map<VmId, double> window_slowdown_sum_;     // current window
    std::vector<QosSample> qos_series_;
    std::vector<std::pair<double, int>> mode_series_;
    std::vector<WindowStats> windows_;
    std::vector<TraceEvent> trace_;
};

RunReport run(const SystemConfig& config, const dtt::Artifacts& artifacts,
              const Scenario& scenario, const RunOptions& options);

} // namespace irqc::sim
