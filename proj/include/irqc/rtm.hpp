#pragma once

#include "irqc/core.hpp"
#include "irqc/dtt.hpp"
#include "irqc/gic.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace irqc::rtm {

// Stage 0: QoS of one VM from one window of PMU samples, against the
// interference-free expectation. Per-event ratios are clamped to [0,1];
// an expectation of zero counts as a met expectation.
double compute_qos(const EventVector& actual, const EventVector& expected,
                   const Weights& weights);

// Stage 1: 2-bit band of a QoS value. Bands are closed at their lower
// edge: [75,100] -> T0, [50,75) -> T1, [25,50) -> T2, [0,25) -> T3.
ControlFlag decode_qos(double qos);

// Stage 1, aggregation: packs one flag per non-QM VM into the global
// control register, ordered by the given layout.
std::uint32_t aggregate_register(const std::vector<std::pair<VmId, ControlFlag>>& flags,
                                 const std::vector<VmId>& layout);

// Stage 2: next degradation mode. With stepwise transitions the returned
// mode moves at most one index toward the table's target per call.
int compute_dm(std::uint32_t reg, const dtt::ControlTable& table, int current_mode,
               bool stepwise);

// Expected performance impact of the RTM as a percentage of the period.
double overhead_model(double worst_case_us, double period_us);

// The seven measuring points of the RTM microbenchmark.
enum MeasuringPoint {
    MP_PMU_SAMPLING = 0,
    MP_QOS_COMPUTE,
    MP_QOS_DECODE,
    MP_VM_SYNC,
    MP_CONTROL_LOGIC,
    MP_REFERENCE_UPDATE,
    MP_IRQ_MASKING,
    MP_COUNT,
};

const char* measuring_point_name(int mp);

struct Instrumentation {
    struct Point {
        std::uint64_t count = 0;
        double sum_us = 0.0;
        double max_us = 0.0;

        double mean_us() const { return count ? sum_us / static_cast<double>(count) : 0.0; }
    };
    std::array<Point, MP_COUNT> points;
    Point total;

    void record(int mp, double duration_us);
};

struct TickResult {
    std::map<VmId, double> qos;            // non-QM VMs only
    std::map<VmId, ControlFlag> flags;
    std::uint32_t control_register = 0;
    int mode = 0;
    bool mode_changed = false;
};

// The run-time mechanism proper. Owns the current degradation mode, the
// per-mode reference values, and the instrumentation counters; masks
// interrupts through the distributor it is handed each tick.
class Rtm {
public:
    Rtm(dtt::Artifacts artifacts, const SystemConfig& config);

    // Algorithm of the periodic timer handler: Stage 0 and Stage 1 for
    // every non-QM VM, then Stage 2 on the ASIL-D VM's behalf.
    TickResult tick(const std::map<VmId, EventVector>& samples, Distributor& distributor);

    // Stage 2 only, for scripted trajectories: applies the control logic
    // to an externally supplied register and masks accordingly.
    int control_step(std::uint32_t reg, Distributor& distributor);

    int current_mode() const { return current_mode_; }
    std::uint32_t last_register() const { return last_register_; }
    const dtt::Artifacts& artifacts() const { return artifacts_; }
    const Instrumentation& instrumentation() const { return instr_; }
    const std::map<VmId, EventVector>& expected() const { return expected_; }

    // Moves masked/unmasked pins between two modes: newly masked pins are
    // cleared in descending degradation-effect order, restored pins are
    // set in ascending order.
    void apply_mode(int mode, Distributor& distributor);

    // Expected events for the next window given a mode: masked tasks
    // contribute nothing, so a partially masked VM is judged against its
    // achievable throughput.
    void update_references(int mode);

private:
    int pin_of(const IrqRef& irq) const;

    dtt::Artifacts artifacts_;
    const SystemConfig* config_;
    std::vector<VmId> layout_;
    std::map<IrqRef, int> effect_rank_;    // 0 = highest degradation effect
    std::map<IrqRef, int> pins_;
    std::map<VmId, EventVector> expected_;
    int current_mode_ = 0;
    std::uint32_t last_register_ = 0;
    bool stepwise_ = true;
    Instrumentation instr_;
};

} // namespace irqc::rtm
