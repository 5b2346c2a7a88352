#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "synscale/common.hpp"
#include "synscale/matrix.hpp"

namespace synscale {

enum class ModelKind { Izhikevich, PoissonSource, CondLif };
enum class SynapseSign { Excitatory, Inhibitory };
enum class StorageKind { Dense, Sparse };

// Quadratic integrate-and-fire neuron with recovery variable. All arrays
// are per-neuron and must match the population size. noiseAmplitude scales
// a per-step standard-normal drive; biasCurrent is a constant drive.
struct IzhikevichParams {
    std::vector<double> a, b, c, d;
    std::vector<double> noiseAmplitude;
    std::vector<double> biasCurrent;
};

// Independent Poisson spike source: each neuron fires in a step with
// probability rateHz * dt / 1000.
struct PoissonParams {
    double rateHz = 0.0;
};

// Conductance-based leaky integrate-and-fire neuron. Shared across the
// population. Conductances decay with time constant tauSynMs and are
// incremented by incoming synaptic weights (inhibitory magnitudes feed the
// inhibitory conductance).
struct CondLifParams {
    double tauMMs = 10.0;
    double eLeakMV = -60.0;
    double vThreshMV = -45.0;
    double vResetMV = -60.0;
    double eExcMV = 0.0;
    double eInhMV = -80.0;
    double tauSynMs = 5.0;
};

struct NeuronPopulation {
    std::string name;
    std::int32_t size = 0;
    ModelKind model = ModelKind::Izhikevich;
    std::uint64_t seed = 0;  // entity seed; combined with the global seed
    std::variant<IzhikevichParams, PoissonParams, CondLifParams> params;
};

// One connectivity block. The pre-side rows may be a window into the pre
// population (preOffset/preCount), which lets a single population host
// separate excitatory and inhibitory source ranges; preCount == -1 means
// the whole population.
struct SynapseGroupSpec {
    std::string name;
    std::string pre;
    std::string post;
    SynapseSign sign = SynapseSign::Excitatory;
    std::int32_t outDegree = 0;
    WeightDist baseWeight;
    double gScale = 1.0;
    StorageKind storage = StorageKind::Sparse;
    std::int32_t preOffset = 0;
    std::int32_t preCount = -1;
};

struct NetworkSpec {
    std::vector<NeuronPopulation> populations;
    std::vector<SynapseGroupSpec> synapses;
    double dtMs = 1.0;
    double durationMs = 1000.0;
    std::uint64_t globalSeed = 0;

    const NeuronPopulation* find_population(const std::string& name) const;
};

struct Violation {
    std::string field;    // dotted path, e.g. "synapses[2].outDegree"
    std::string message;  // human-readable, names the offending values
};

// Full structural check; returns every violation found (empty == valid).
// Never throws on invalid input - callers decide how to report.
std::vector<Violation> validate(const NetworkSpec& spec);

// Convenience: throws SpecError listing all violations when invalid.
void require_valid(const NetworkSpec& spec);

// Effective pre-side row count of a synapse group (resolves preCount == -1
// against the pre population's size).
std::int32_t group_pre_count(const SynapseGroupSpec& g, std::int32_t preSize);

// ---------------------------------------------------------------------------
// Reference network builders
// ---------------------------------------------------------------------------

// Single recurrent population, excFraction excitatory. Excitatory cells use
// the classic regular-spiking recipe (a=0.02, b=0.2, c=-65+15r^2, d=8-6r^2),
// inhibitory cells the fast-spiking one (a=0.02+0.08r, b=0.25-0.05r, c=-65,
// d=2), with noise amplitudes noiseExc / noiseInh. Every neuron receives
// exactly nConn excitatory and nConn inhibitory synapses in expectation via
// two fixed-out-degree groups ("exc", "inh") drawn from the respective index
// ranges; excitatory weights ~ U(0, excWeightHi), inhibitory weights
// ~ -U(0, inhWeightHi).
struct IzhBuildOptions {
    double dtMs = 1.0;
    double durationMs = 1000.0;
    double noiseExc = 5.0;
    double noiseInh = 2.0;
    double excWeightHi = 0.5;
    double inhWeightHi = 1.0;
    double biasCurrent = 0.0;
    StorageKind storage = StorageKind::Sparse;
};

NetworkSpec build_izhikevich_net(std::int32_t nNeurons, std::int32_t nConn, double excFraction,
                                 double gScale, std::uint64_t seed,
                                 const IzhBuildOptions& opt = {});

// Four-population olfactory circuit: Poisson projection neurons (pn) drive
// Kenyon cells (kc, sparse divergent connectivity) and lateral horn
// interneurons (lhi, all-to-all); lhi inhibit kc; kc excite decision
// neurons (dn). gScales must provide one entry per synapse group:
// "pn_kc", "pn_lhi", "lhi_kc", "kc_dn".
struct MBodyBuildOptions {
    double dtMs = 1.0;
    double durationMs = 1000.0;
    double pnRateHz = 50.0;
    double pnKcOutFraction = 0.5;  // each pn contacts this fraction of kc
    CondLifParams lif{};
    double pnKcWeightHi = 0.02;
    double pnLhiWeight = 0.02;
    double lhiKcWeight = 0.01;
    double kcDnWeight = 0.01;
};

NetworkSpec build_mbody_net(std::int32_t nPN, std::int32_t nLHI, std::int32_t nKC, std::int32_t nDN,
                            const std::map<std::string, double>& gScales, std::uint64_t seed,
                            const MBodyBuildOptions& opt = {});

}  // namespace synscale
