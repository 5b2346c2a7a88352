#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synscale/network.hpp"

namespace synscale {

// Storage selection at run time: honour each group's spec, or force one
// layout for every group. Forcing must never change results - the two
// propagation paths are required to produce bit-identical accumulators.
enum class StorageMode { FromSpec, ForceDense, ForceSparse };

struct SpikeEvent {
    std::int64_t step;
    std::int32_t population;  // index into Raster::populations
    std::int32_t neuron;
};

struct Raster {
    struct PopulationInfo {
        std::string name;
        std::int32_t size;
    };
    std::vector<PopulationInfo> populations;
    std::vector<SpikeEvent> events;  // ordered by (step, population, neuron)
};

struct RunResult {
    Raster raster;
    std::map<std::string, double> avgSpike;  // per population, spikes/neuron/second
    std::int64_t sumNaNs = 0;                // neurons ever flagged non-finite
    std::int64_t steps = 0;
    double durationMs = 0.0;
    double wallTimeMs = 0.0;
};

// Mutable per-population state. Which arrays are live depends on the model:
// Izhikevich uses v/u, conductance LIF uses v/gExc/gInh, Poisson sources
// use none. excIn/inhIn are the per-step synaptic accumulators and nanFlag
// is the sticky non-finite marker (a neuron stays flagged once flagged).
struct PopulationState {
    std::vector<scalar> v, u;
    std::vector<scalar> gExc, gInh;
    std::vector<scalar> excIn, inhIn;
    std::vector<std::uint8_t> nanFlag;
    std::int64_t flagged = 0;
};

// Scans a population's live state arrays and flags neurons whose state
// stopped being finite (NaN or infinity). Returns the number of newly
// flagged neurons; already-flagged neurons are never re-counted.
std::int64_t detect_nans(PopulationState& st, ModelKind model);

// Adds each spiking pre-neuron's outgoing weights into acc (length nPost).
// Both overloads walk pre rows in the given order and post indices in
// ascending order, so for equal connectivity they produce bit-identical
// accumulators. Throws SpecError on out-of-range spike indices or a
// mis-sized accumulator.
void propagate(const DenseMatrix& m, std::span<const std::int32_t> spikes, std::span<scalar> acc);
void propagate(const CrsMatrix& m, std::span<const std::int32_t> spikes, std::span<scalar> acc);

// Mean firing rate in spikes per neuron per second for one population of a
// recorded raster.
double avg_spike(const Raster& raster, const std::string& population, double durationMs);

// Deterministic stepper. Construction validates the spec, draws the
// connectivity and initialises state; run() advances all remaining steps.
class Simulation {
public:
    Simulation(const NetworkSpec& spec, StorageMode mode = StorageMode::FromSpec);
    ~Simulation();
    Simulation(Simulation&&) noexcept;
    Simulation& operator=(Simulation&&) noexcept;

    void step();
    std::int64_t steps_total() const;
    std::int64_t steps_done() const;

    const PopulationState& population_state(const std::string& name) const;
    PopulationState& population_state(const std::string& name);

    // Connectivity actually used for a group (after gScale and storage mode).
    const DenseMatrix* group_dense(const std::string& name) const;
    const CrsMatrix* group_sparse(const std::string& name) const;

    // Advances to the end and collects results. Callable once.
    RunResult finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// One-call convenience: simulate the whole spec and return the results.
RunResult run(const NetworkSpec& spec, StorageMode mode = StorageMode::FromSpec);

}  // namespace synscale
