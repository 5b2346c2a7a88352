#include "synscale/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "synscale/random.hpp"

namespace synscale {

const NeuronPopulation* NetworkSpec::find_population(const std::string& name) const {
    for (const auto& p : populations)
        if (p.name == name) return &p;
    return nullptr;
}

std::int32_t group_pre_count(const SynapseGroupSpec& g, std::int32_t preSize) {
    return g.preCount < 0 ? preSize - g.preOffset : g.preCount;
}

namespace {

bool finite(double v) { return std::isfinite(v); }

std::string dist_problem(const WeightDist& d) {
    if (d.kind == WeightDist::Kind::Uniform) {
        if (!finite(d.lo) || !finite(d.hi) || d.lo < 0.0 || !(d.lo < d.hi))
            return "uniform weight range needs finite bounds with 0 <= lo < hi";
    } else {
        if (!finite(d.value) || !(d.value > 0.0))
            return "constant weight must be finite and > 0";
    }
    return {};
}

void check_izhikevich(const NeuronPopulation& p, const IzhikevichParams& prm,
                      const std::string& where, std::vector<Violation>& out) {
    const auto n = static_cast<std::size_t>(p.size);
    auto arr = [&](const std::vector<double>& v, const char* name) {
        if (v.size() != n) {
            out.push_back({where + "." + name, std::string(name) + " has " +
                                                   std::to_string(v.size()) +
                                                   " entries, population size is " +
                                                   std::to_string(p.size)});
            return;
        }
        for (double x : v)
            if (!finite(x)) {
                out.push_back({where + "." + name, std::string(name) + " contains a non-finite value"});
                break;
            }
    };
    arr(prm.a, "a");
    arr(prm.b, "b");
    arr(prm.c, "c");
    arr(prm.d, "d");
    arr(prm.noiseAmplitude, "noiseAmplitude");
    arr(prm.biasCurrent, "biasCurrent");
    if (prm.a.size() == n)
        for (double a : prm.a)
            if (finite(a) && !(a > 0.0)) {
                out.push_back({where + ".a", "recovery rate a must be > 0 for every neuron"});
                break;
            }
    if (prm.noiseAmplitude.size() == n)
        for (double s : prm.noiseAmplitude)
            if (finite(s) && s < 0.0) {
                out.push_back({where + ".noiseAmplitude", "noise amplitude must be >= 0"});
                break;
            }
}

void check_cond_lif(const CondLifParams& prm, const std::string& where,
                    std::vector<Violation>& out) {
    auto bad = [&](const char* f, const std::string& msg) { out.push_back({where + "." + f, msg}); };
    for (auto [v, f] : {std::pair{prm.tauMMs, "tauMMs"}, {prm.eLeakMV, "eLeakMV"},
                        {prm.vThreshMV, "vThreshMV"}, {prm.vResetMV, "vResetMV"},
                        {prm.eExcMV, "eExcMV"}, {prm.eInhMV, "eInhMV"}, {prm.tauSynMs, "tauSynMs"}})
        if (!finite(v)) bad(f, "must be finite");
    if (finite(prm.tauMMs) && !(prm.tauMMs > 0.0)) bad("tauMMs", "membrane time constant must be > 0");
    if (finite(prm.tauSynMs) && !(prm.tauSynMs > 0.0)) bad("tauSynMs", "synaptic time constant must be > 0");
    if (finite(prm.vResetMV) && finite(prm.vThreshMV) && !(prm.vResetMV < prm.vThreshMV))
        bad("vResetMV", "reset potential must lie below threshold");
    if (finite(prm.eInhMV) && finite(prm.vThreshMV) && !(prm.eInhMV < prm.vThreshMV))
        bad("eInhMV", "inhibitory reversal must lie below threshold");
    if (finite(prm.eExcMV) && finite(prm.vThreshMV) && !(prm.eExcMV > prm.vThreshMV))
        bad("eExcMV", "excitatory reversal must lie above threshold");
}

}  // namespace

std::vector<Violation> validate(const NetworkSpec& spec) {
    std::vector<Violation> out;

    if (!finite(spec.dtMs) || !(spec.dtMs > 0.0))
        out.push_back({"dtMs", "dt must be positive and finite"});
    if (!finite(spec.durationMs) || !(spec.durationMs > 0.0))
        out.push_back({"durationMs", "duration must be positive and finite"});
    if (spec.populations.empty())
        out.push_back({"populations", "network needs at least one population"});

    std::map<std::string, const NeuronPopulation*> byName;
    for (std::size_t pi = 0; pi < spec.populations.size(); ++pi) {
        const auto& p = spec.populations[pi];
        const std::string where = "populations[" + std::to_string(pi) + "]";
        if (p.name.empty()) out.push_back({where + ".name", "population name must be non-empty"});
        if (!p.name.empty() && !byName.emplace(p.name, &p).second)
            out.push_back({where + ".name", "duplicate population name '" + p.name + "'"});
        if (p.size < 1) {
            out.push_back({where + ".size", "population size must be >= 1, got " + std::to_string(p.size)});
            continue;  // per-neuron array checks would be meaningless
        }
        switch (p.model) {
        case ModelKind::Izhikevich:
            if (const auto* prm = std::get_if<IzhikevichParams>(&p.params))
                check_izhikevich(p, *prm, where, out);
            else
                out.push_back({where + ".params", "population model and parameter block disagree"});
            break;
        case ModelKind::PoissonSource:
            if (const auto* prm = std::get_if<PoissonParams>(&p.params)) {
                if (!finite(prm->rateHz) || prm->rateHz < 0.0)
                    out.push_back({where + ".params.rateHz", "rate must be finite and >= 0"});
                else if (finite(spec.dtMs) && spec.dtMs > 0.0 &&
                         prm->rateHz * spec.dtMs / 1000.0 > 1.0)
                    out.push_back({where + ".params.rateHz",
                                   "rate * dt exceeds one spike per step (p > 1)"});
            } else {
                out.push_back({where + ".params", "population model and parameter block disagree"});
            }
            break;
        case ModelKind::CondLif:
            if (const auto* prm = std::get_if<CondLifParams>(&p.params))
                check_cond_lif(*prm, where + ".params", out);
            else
                out.push_back({where + ".params", "population model and parameter block disagree"});
            break;
        }
    }

    std::set<std::string> groupNames;
    for (std::size_t gi = 0; gi < spec.synapses.size(); ++gi) {
        const auto& g = spec.synapses[gi];
        const std::string where = "synapses[" + std::to_string(gi) + "]";
        if (g.name.empty()) out.push_back({where + ".name", "synapse group name must be non-empty"});
        if (!g.name.empty() && !groupNames.insert(g.name).second)
            out.push_back({where + ".name", "duplicate synapse group name '" + g.name + "'"});

        auto preIt = byName.find(g.pre);
        auto postIt = byName.find(g.post);
        if (preIt == byName.end())
            out.push_back({where + ".pre", "references unknown population '" + g.pre + "'"});
        if (postIt == byName.end())
            out.push_back({where + ".post", "references unknown population '" + g.post + "'"});

        if (preIt != byName.end() && preIt->second->size >= 1) {
            const std::int32_t preSize = preIt->second->size;
            if (g.preOffset < 0 || g.preOffset >= preSize)
                out.push_back({where + ".preOffset",
                               "pre window offset out of range for population of size " +
                                   std::to_string(preSize)});
            else {
                const std::int32_t count = group_pre_count(g, preSize);
                if (count < 1 || g.preOffset + count > preSize)
                    out.push_back({where + ".preCount",
                                   "pre window [" + std::to_string(g.preOffset) + ", " +
                                       std::to_string(g.preOffset + count) +
                                       ") exceeds population of size " + std::to_string(preSize)});
            }
        }
        if (postIt != byName.end() && postIt->second->size >= 1) {
            const std::int32_t postSize = postIt->second->size;
            if (g.outDegree < 1 || g.outDegree > postSize)
                out.push_back({where + ".outDegree",
                               "out-degree must satisfy 1 <= k <= " + std::to_string(postSize) +
                                   ", got " + std::to_string(g.outDegree)});
        }
        if (auto msg = dist_problem(g.baseWeight); !msg.empty())
            out.push_back({where + ".baseWeight", msg});
        if (!finite(g.gScale) || g.gScale < 0.0)
            out.push_back({where + ".gScale", "gScale must be finite and >= 0, got " +
                                                  std::to_string(g.gScale)});
    }
    return out;
}

void require_valid(const NetworkSpec& spec) {
    const auto violations = validate(spec);
    if (violations.empty()) return;
    std::ostringstream msg;
    msg << "invalid network spec (" << violations.size() << " problem"
        << (violations.size() == 1 ? "" : "s") << "):";
    for (const auto& v : violations) msg << "\n  " << v.field << ": " << v.message;
    throw SpecError(msg.str());
}

NetworkSpec build_izhikevich_net(std::int32_t nNeurons, std::int32_t nConn, double excFraction,
                                 double gScale, std::uint64_t seed, const IzhBuildOptions& opt) {
    if (nNeurons < 2)
        throw SpecError("nNeurons must be >= 2, got " + std::to_string(nNeurons));
    if (!(excFraction > 0.0) || !(excFraction < 1.0))
        throw SpecError("excFraction must lie strictly inside (0, 1), got " +
                        std::to_string(excFraction));
    if (!std::isfinite(gScale) || gScale < 0.0)
        throw SpecError("gScale must be finite and >= 0, got " + std::to_string(gScale));
    if (nConn < 1 || nConn > nNeurons)
        throw SpecError("nConn must satisfy 1 <= nConn <= nNeurons, got nConn=" +
                        std::to_string(nConn) + " with nNeurons=" + std::to_string(nNeurons));

    const auto nExc = static_cast<std::int32_t>(std::floor(excFraction * nNeurons));
    const auto nInh = nNeurons - nExc;
    if (nExc < 1 || nInh < 1)
        throw SpecError("excFraction " + std::to_string(excFraction) + " leaves an empty " +
                        (nExc < 1 ? "excitatory" : "inhibitory") + " slice for " +
                        std::to_string(nNeurons) + " neurons");

    NeuronPopulation pop;
    pop.name = "neurons";
    pop.size = nNeurons;
    pop.model = ModelKind::Izhikevich;
    pop.seed = 1;

    IzhikevichParams prm;
    prm.a.resize(nNeurons);
    prm.b.resize(nNeurons);
    prm.c.resize(nNeurons);
    prm.d.resize(nNeurons);
    prm.noiseAmplitude.resize(nNeurons);
    prm.biasCurrent.assign(nNeurons, opt.biasCurrent);

    // Heterogeneity recipe: r^2 skews excitatory cells towards regular
    // spiking, linear r spreads inhibitory cells between fast spiking and
    // low-threshold spiking.
    RandomStream paramStream(seed, pop.seed, "neurons/params");
    for (std::int32_t i = 0; i < nExc; ++i) {
        const double r = paramStream.uniform01();
        prm.a[i] = 0.02;
        prm.b[i] = 0.2;
        prm.c[i] = -65.0 + 15.0 * r * r;
        prm.d[i] = 8.0 - 6.0 * r * r;
        prm.noiseAmplitude[i] = opt.noiseExc;
    }
    for (std::int32_t i = nExc; i < nNeurons; ++i) {
        const double r = paramStream.uniform01();
        prm.a[i] = 0.02 + 0.08 * r;
        prm.b[i] = 0.25 - 0.05 * r;
        prm.c[i] = -65.0;
        prm.d[i] = 2.0;
        prm.noiseAmplitude[i] = opt.noiseInh;
    }
    pop.params = std::move(prm);

    NetworkSpec spec;
    spec.populations.push_back(std::move(pop));
    spec.dtMs = opt.dtMs;
    spec.durationMs = opt.durationMs;
    spec.globalSeed = seed;

    SynapseGroupSpec exc;
    exc.name = "exc";
    exc.pre = exc.post = "neurons";
    exc.sign = SynapseSign::Excitatory;
    exc.outDegree = nConn;
    exc.baseWeight = WeightDist::uniform(0.0, opt.excWeightHi);
    exc.gScale = gScale;
    exc.storage = opt.storage;
    exc.preOffset = 0;
    exc.preCount = nExc;

    SynapseGroupSpec inh;
    inh.name = "inh";
    inh.pre = inh.post = "neurons";
    inh.sign = SynapseSign::Inhibitory;
    inh.outDegree = nConn;
    inh.baseWeight = WeightDist::uniform(0.0, opt.inhWeightHi);
    inh.gScale = gScale;
    inh.storage = opt.storage;
    inh.preOffset = nExc;
    inh.preCount = nInh;

    spec.synapses = {std::move(exc), std::move(inh)};
    return spec;
}

NetworkSpec build_mbody_net(std::int32_t nPN, std::int32_t nLHI, std::int32_t nKC, std::int32_t nDN,
                            const std::map<std::string, double>& gScales, std::uint64_t seed,
                            const MBodyBuildOptions& opt) {
    for (auto [n, what] : {std::pair{nPN, "nPN"}, {nLHI, "nLHI"}, {nKC, "nKC"}, {nDN, "nDN"}})
        if (n < 1)
            throw SpecError(std::string(what) + " must be >= 1, got " + std::to_string(n));

    auto gScaleOf = [&](const char* group) {
        auto it = gScales.find(group);
        if (it == gScales.end())
            throw SpecError("gScales is missing an entry for synapse group '" + std::string(group) +
                            "' (required: pn_kc, pn_lhi, lhi_kc, kc_dn)");
        if (!std::isfinite(it->second) || it->second < 0.0)
            throw SpecError("gScales['" + std::string(group) + "'] must be finite and >= 0");
        return it->second;
    };
    for (const auto& [name, g] : gScales) {
        (void)g;
        if (name != "pn_kc" && name != "pn_lhi" && name != "lhi_kc" && name != "kc_dn")
            throw SpecError("gScales has an entry for unknown synapse group '" + name + "'");
    }

    NetworkSpec spec;
    spec.dtMs = opt.dtMs;
    spec.durationMs = opt.durationMs;
    spec.globalSeed = seed;

    NeuronPopulation pn;
    pn.name = "pn";
    pn.size = nPN;
    pn.model = ModelKind::PoissonSource;
    pn.seed = 1;
    pn.params = PoissonParams{opt.pnRateHz};
    spec.populations.push_back(std::move(pn));

    std::uint64_t entitySeed = 2;
    for (auto [name, size] : {std::pair<const char*, std::int32_t>{"lhi", nLHI}, {"kc", nKC}, {"dn", nDN}}) {
        NeuronPopulation p;
        p.name = name;
        p.size = size;
        p.model = ModelKind::CondLif;
        p.seed = entitySeed++;
        p.params = opt.lif;
        spec.populations.push_back(std::move(p));
    }

    const auto kcFan = std::max<std::int32_t>(
        1, static_cast<std::int32_t>(std::lround(opt.pnKcOutFraction * nKC)));

    auto group = [](const char* name, const char* pre, const char* post, SynapseSign sign,
                    std::int32_t outDegree, WeightDist w, double g, StorageKind storage) {
        SynapseGroupSpec s;
        s.name = name;
        s.pre = pre;
        s.post = post;
        s.sign = sign;
        s.outDegree = outDegree;
        s.baseWeight = w;
        s.gScale = g;
        s.storage = storage;
        return s;
    };

    spec.synapses.push_back(group("pn_kc", "pn", "kc", SynapseSign::Excitatory, kcFan,
                                  WeightDist::uniform(0.0, opt.pnKcWeightHi), gScaleOf("pn_kc"),
                                  StorageKind::Sparse));
    spec.synapses.push_back(group("pn_lhi", "pn", "lhi", SynapseSign::Excitatory, nLHI,
                                  WeightDist::constant(opt.pnLhiWeight), gScaleOf("pn_lhi"),
                                  StorageKind::Dense));
    spec.synapses.push_back(group("lhi_kc", "lhi", "kc", SynapseSign::Inhibitory, nKC,
                                  WeightDist::constant(opt.lhiKcWeight), gScaleOf("lhi_kc"),
                                  StorageKind::Dense));
    spec.synapses.push_back(group("kc_dn", "kc", "dn", SynapseSign::Excitatory, nDN,
                                  WeightDist::constant(opt.kcDnWeight), gScaleOf("kc_dn"),
                                  StorageKind::Dense));
    return spec;
}

}  // namespace synscale
