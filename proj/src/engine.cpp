#include "synscale/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

#include "synscale/random.hpp"

namespace synscale {

namespace {

std::int64_t step_count(double durationMs, double dtMs) {
    // small slack so duration = n*dt never rounds to n+1 steps
    const auto n = static_cast<std::int64_t>(std::ceil(durationMs / dtMs - 1e-9));
    return std::max<std::int64_t>(n, 1);
}

// Shared by RunResult and avg_spike so the two always agree bit for bit.
double spike_rate(std::int64_t count, std::int32_t size, double durationMs) {
    return static_cast<double>(count) / (static_cast<double>(size) * (durationMs / 1000.0));
}

}  // namespace

std::int64_t detect_nans(PopulationState& st, ModelKind model) {
    std::int64_t newly = 0;
    const std::size_t n = st.nanFlag.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (st.nanFlag[i]) continue;
        bool bad = false;
        switch (model) {
        case ModelKind::Izhikevich:
            bad = !std::isfinite(st.v[i]) || !std::isfinite(st.u[i]);
            break;
        case ModelKind::CondLif:
            bad = !std::isfinite(st.v[i]) || !std::isfinite(st.gExc[i]) ||
                  !std::isfinite(st.gInh[i]);
            break;
        case ModelKind::PoissonSource:
            break;  // sources hold no continuous state
        }
        if (bad) {
            st.nanFlag[i] = 1;
            ++newly;
        }
    }
    st.flagged += newly;
    return newly;
}

void propagate(const DenseMatrix& m, std::span<const std::int32_t> spikes, std::span<scalar> acc) {
    if (static_cast<std::int64_t>(acc.size()) != m.nPost)
        throw SpecError("accumulator length " + std::to_string(acc.size()) +
                        " does not match nPost " + std::to_string(m.nPost));
    for (std::int32_t i : spikes) {
        if (i < 0 || i >= m.nPre)
            throw SpecError("spike index " + std::to_string(i) + " outside [0, " +
                            std::to_string(m.nPre) + ")");
        const scalar* row = m.weights.data() + static_cast<std::size_t>(i) * m.nPost;
        for (std::int32_t j = 0; j < m.nPost; ++j) {
            const scalar w = row[j];
            if (w != scalar(0)) acc[j] += w;
        }
    }
}

void propagate(const CrsMatrix& m, std::span<const std::int32_t> spikes, std::span<scalar> acc) {
    if (static_cast<std::int64_t>(acc.size()) != m.nPost)
        throw SpecError("accumulator length " + std::to_string(acc.size()) +
                        " does not match nPost " + std::to_string(m.nPost));
    for (std::int32_t i : spikes) {
        if (i < 0 || i >= m.nPre)
            throw SpecError("spike index " + std::to_string(i) + " outside [0, " +
                            std::to_string(m.nPre) + ")");
        for (std::int64_t k = m.rowStart[i]; k < m.rowStart[i + 1]; ++k)
            acc[m.postInd[k]] += m.gValues[k];
    }
}

double avg_spike(const Raster& raster, const std::string& population, double durationMs) {
    if (!std::isfinite(durationMs) || !(durationMs > 0.0))
        throw SpecError("durationMs must be finite and > 0");
    std::int32_t index = -1;
    std::int32_t size = 0;
    for (std::size_t i = 0; i < raster.populations.size(); ++i)
        if (raster.populations[i].name == population) {
            index = static_cast<std::int32_t>(i);
            size = raster.populations[i].size;
            break;
        }
    if (index < 0) throw SpecError("raster has no population named '" + population + "'");
    if (size < 1) throw SpecError("population '" + population + "' has non-positive size");
    std::int64_t count = 0;
    for (const auto& e : raster.events)
        if (e.population == index) ++count;
    return spike_rate(count, size, durationMs);
}

// ---------------------------------------------------------------------------

struct PopulationRuntime {
    const NeuronPopulation* spec;
    ModelKind kind;
    PopulationState st;
    std::vector<std::int32_t> spikes;  // indices spiking in the current step
    std::int64_t spikeCount = 0;
    std::optional<RandomStream> rng;  // noise / source draws

    // Izhikevich per-neuron parameters, pre-cast to storage precision
    std::vector<scalar> a, b, c, d;
    std::vector<double> noiseAmp, bias;

    // conductance-LIF constants
    scalar tauM = 0, eLeak = 0, eExc = 0, eInh = 0, vThresh = 0, vReset = 0, synDecay = 0;

    double poissonP = 0.0;
};

struct GroupRuntime {
    const SynapseGroupSpec* spec;
    std::int32_t preIdx = 0, postIdx = 0;
    std::int32_t preOffset = 0, preCount = 0;
    bool inhibitory = false;
    std::optional<DenseMatrix> dense;
    std::optional<CrsMatrix> sparse;
    std::vector<std::int32_t> windowed;  // scratch: spikes shifted into row space
};

struct Simulation::Impl {
    NetworkSpec spec;
    double dt;
    scalar dtS;
    std::int64_t steps = 0;
    std::int64_t done = 0;
    bool finished = false;
    std::vector<PopulationRuntime> pops;
    std::vector<GroupRuntime> groups;
    std::vector<SpikeEvent> events;

    void advance(PopulationRuntime& p);
    void threshold(PopulationRuntime& p);
};

Simulation::Simulation(const NetworkSpec& spec, StorageMode mode)
    : impl_(std::make_unique<Impl>()) {
    require_valid(spec);
    impl_->spec = spec;
    auto& s = impl_->spec;
    impl_->dt = s.dtMs;
    impl_->dtS = static_cast<scalar>(s.dtMs);
    impl_->steps = step_count(s.durationMs, s.dtMs);

    for (const auto& ps : s.populations) {
        PopulationRuntime p;
        p.spec = &ps;
        p.kind = ps.model;
        const auto n = static_cast<std::size_t>(ps.size);
        p.st.excIn.assign(n, scalar(0));
        p.st.inhIn.assign(n, scalar(0));
        p.st.nanFlag.assign(n, 0);
        switch (ps.model) {
        case ModelKind::Izhikevich: {
            const auto& prm = std::get<IzhikevichParams>(ps.params);
            p.a.resize(n);
            p.b.resize(n);
            p.c.resize(n);
            p.d.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                p.a[i] = static_cast<scalar>(prm.a[i]);
                p.b[i] = static_cast<scalar>(prm.b[i]);
                p.c[i] = static_cast<scalar>(prm.c[i]);
                p.d[i] = static_cast<scalar>(prm.d[i]);
            }
            p.noiseAmp = prm.noiseAmplitude;
            p.bias = prm.biasCurrent;
            p.st.v.assign(n, scalar(-65));
            p.st.u.resize(n);
            for (std::size_t i = 0; i < n; ++i) p.st.u[i] = p.b[i] * p.st.v[i];
            p.rng.emplace(s.globalSeed, ps.seed, ps.name + "/noise");
            break;
        }
        case ModelKind::PoissonSource: {
            const auto& prm = std::get<PoissonParams>(ps.params);
            p.poissonP = prm.rateHz * s.dtMs / 1000.0;
            p.rng.emplace(s.globalSeed, ps.seed, ps.name + "/source");
            break;
        }
        case ModelKind::CondLif: {
            const auto& prm = std::get<CondLifParams>(ps.params);
            p.tauM = static_cast<scalar>(prm.tauMMs);
            p.eLeak = static_cast<scalar>(prm.eLeakMV);
            p.eExc = static_cast<scalar>(prm.eExcMV);
            p.eInh = static_cast<scalar>(prm.eInhMV);
            p.vThresh = static_cast<scalar>(prm.vThreshMV);
            p.vReset = static_cast<scalar>(prm.vResetMV);
            p.synDecay = static_cast<scalar>(std::exp(-s.dtMs / prm.tauSynMs));
            p.st.v.assign(n, static_cast<scalar>(prm.eLeakMV));
            p.st.gExc.assign(n, scalar(0));
            p.st.gInh.assign(n, scalar(0));
            break;
        }
        }
        impl_->pops.push_back(std::move(p));
    }

    auto popIndex = [&](const std::string& name) {
        for (std::size_t i = 0; i < s.populations.size(); ++i)
            if (s.populations[i].name == name) return static_cast<std::int32_t>(i);
        throw SpecError("unknown population '" + name + "'");  // unreachable after validate
    };

    for (const auto& gs : s.synapses) {
        GroupRuntime g;
        g.spec = &gs;
        g.preIdx = popIndex(gs.pre);
        g.postIdx = popIndex(gs.post);
        g.preOffset = gs.preOffset;
        g.preCount = group_pre_count(gs, s.populations[g.preIdx].size);
        g.inhibitory = gs.sign == SynapseSign::Inhibitory;

        const std::uint64_t genSeed = derive_seed(s.globalSeed, gs.name);
        DenseMatrix base =
            gen_fixed_outdegree(g.preCount, s.populations[g.postIdx].size, gs.outDegree,
                                gs.baseWeight, g.inhibitory ? -1 : +1, genSeed);
        // apply gScale in place; gScale == 0 legitimately blanks the group
        for (scalar& w : base.weights)
            if (w != scalar(0)) {
                w = static_cast<scalar>(static_cast<double>(w) * gs.gScale);
                if (!std::isfinite(w))
                    throw SpecError("gScale " + std::to_string(gs.gScale) +
                                    " overflows weights of group '" + gs.name + "'");
            }

        const StorageKind effective = mode == StorageMode::ForceDense    ? StorageKind::Dense
                                      : mode == StorageMode::ForceSparse ? StorageKind::Sparse
                                                                         : gs.storage;
        if (effective == StorageKind::Dense)
            g.dense = std::move(base);
        else
            g.sparse = to_sparse(base);
        impl_->groups.push_back(std::move(g));
    }
}

Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

void Simulation::Impl::advance(PopulationRuntime& p) {
    const std::size_t n = p.st.nanFlag.size();
    switch (p.kind) {
    case ModelKind::Izhikevich: {
        for (std::size_t i = 0; i < n; ++i) {
            scalar input = static_cast<scalar>(p.bias[i] + p.noiseAmp[i] * p.rng->gaussian());
            input += p.st.excIn[i];
            input += p.st.inhIn[i];
            scalar v = p.st.v[i];
            scalar u = p.st.u[i];
            // two half-steps on v for numerical stability, one full step on u
            v += scalar(0.5) * dtS * (scalar(0.04) * v * v + scalar(5) * v + scalar(140) - u + input);
            v += scalar(0.5) * dtS * (scalar(0.04) * v * v + scalar(5) * v + scalar(140) - u + input);
            u += dtS * p.a[i] * (p.b[i] * v - u);
            p.st.v[i] = v;
            p.st.u[i] = u;
        }
        break;
    }
    case ModelKind::CondLif: {
        for (std::size_t i = 0; i < n; ++i) {
            // fold this step's synaptic input into the conductances first;
            // inhIn carries negative weight sums, so subtracting adds magnitude
            const scalar ge = p.st.gExc[i] * p.synDecay + p.st.excIn[i];
            const scalar gi = p.st.gInh[i] * p.synDecay - p.st.inhIn[i];
            scalar v = p.st.v[i];
            v += dtS * ((p.eLeak - v) / p.tauM + ge * (p.eExc - v) + gi * (p.eInh - v));
            p.st.gExc[i] = ge;
            p.st.gInh[i] = gi;
            p.st.v[i] = v;
        }
        break;
    }
    case ModelKind::PoissonSource: {
        for (std::size_t i = 0; i < n; ++i)
            if (p.rng->uniform01() < p.poissonP)
                p.spikes.push_back(static_cast<std::int32_t>(i));
        break;
    }
    }
}

void Simulation::Impl::threshold(PopulationRuntime& p) {
    const std::size_t n = p.st.nanFlag.size();
    switch (p.kind) {
    case ModelKind::Izhikevich:
        for (std::size_t i = 0; i < n; ++i)
            if (p.st.v[i] >= scalar(30)) {
                p.spikes.push_back(static_cast<std::int32_t>(i));
                p.st.v[i] = p.c[i];
                p.st.u[i] += p.d[i];
            }
        break;
    case ModelKind::CondLif:
        for (std::size_t i = 0; i < n; ++i)
            if (p.st.v[i] >= p.vThresh) {
                p.spikes.push_back(static_cast<std::int32_t>(i));
                p.st.v[i] = p.vReset;
            }
        break;
    case ModelKind::PoissonSource:
        break;  // source spikes were decided in advance()
    }
}

void Simulation::step() {
    auto& im = *impl_;
    if (im.finished) throw SpecError("simulation already finished");
    if (im.done >= im.steps) throw SpecError("simulation already ran all its steps");

    for (auto& p : im.pops) {
        p.spikes.clear();
        im.advance(p);
    }
    for (auto& p : im.pops) detect_nans(p.st, p.kind);
    for (auto& p : im.pops) im.threshold(p);

    for (std::size_t pi = 0; pi < im.pops.size(); ++pi) {
        auto& p = im.pops[pi];
        p.spikeCount += static_cast<std::int64_t>(p.spikes.size());
        for (std::int32_t neuron : p.spikes)
            im.events.push_back({im.done, static_cast<std::int32_t>(pi), neuron});
    }

    // zero the accumulators, then deliver this step's spikes for the next one
    for (auto& p : im.pops) {
        std::fill(p.st.excIn.begin(), p.st.excIn.end(), scalar(0));
        std::fill(p.st.inhIn.begin(), p.st.inhIn.end(), scalar(0));
    }
    for (auto& g : im.groups) {
        const auto& pre = im.pops[g.preIdx];
        auto& post = im.pops[g.postIdx];
        g.windowed.clear();
        for (std::int32_t i : pre.spikes) {
            const std::int32_t r = i - g.preOffset;
            if (r >= 0 && r < g.preCount) g.windowed.push_back(r);
        }
        if (g.windowed.empty()) continue;
        auto acc = std::span<scalar>(g.inhibitory ? post.st.inhIn : post.st.excIn);
        if (g.dense)
            propagate(*g.dense, g.windowed, acc);
        else
            propagate(*g.sparse, g.windowed, acc);
    }
    ++im.done;
}

std::int64_t Simulation::steps_total() const { return impl_->steps; }
std::int64_t Simulation::steps_done() const { return impl_->done; }

const PopulationState& Simulation::population_state(const std::string& name) const {
    for (const auto& p : impl_->pops)
        if (p.spec->name == name) return p.st;
    throw SpecError("unknown population '" + name + "'");
}

PopulationState& Simulation::population_state(const std::string& name) {
    for (auto& p : impl_->pops)
        if (p.spec->name == name) return p.st;
    throw SpecError("unknown population '" + name + "'");
}

const DenseMatrix* Simulation::group_dense(const std::string& name) const {
    for (const auto& g : impl_->groups)
        if (g.spec->name == name) return g.dense ? &*g.dense : nullptr;
    throw SpecError("unknown synapse group '" + name + "'");
}

const CrsMatrix* Simulation::group_sparse(const std::string& name) const {
    for (const auto& g : impl_->groups)
        if (g.spec->name == name) return g.sparse ? &*g.sparse : nullptr;
    throw SpecError("unknown synapse group '" + name + "'");
}

RunResult Simulation::finish() {
    auto& im = *impl_;
    if (im.finished) throw SpecError("finish() may only be called once");
    while (im.done < im.steps) step();
    im.finished = true;

    RunResult r;
    r.steps = im.steps;
    r.durationMs = im.spec.durationMs;
    for (const auto& p : im.pops) {
        r.raster.populations.push_back({p.spec->name, p.spec->size});
        r.avgSpike[p.spec->name] = spike_rate(p.spikeCount, p.spec->size, im.spec.durationMs);
        r.sumNaNs += p.st.flagged;
    }
    r.raster.events = std::move(im.events);
    return r;
}

RunResult run(const NetworkSpec& spec, StorageMode mode) {
    const auto t0 = std::chrono::steady_clock::now();
    Simulation sim(spec, mode);
    RunResult r = sim.finish();
    const auto t1 = std::chrono::steady_clock::now();
    r.wallTimeMs = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return r;
}

}  // namespace synscale
