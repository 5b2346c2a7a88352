#include "synscale/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace synscale {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw SpecError("failed while reading '" + path + "'");
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SpecError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw SpecError("failed while writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// network specs
// ---------------------------------------------------------------------------

namespace {

json dist_to_json(const WeightDist& d) {
    if (d.kind == WeightDist::Kind::Uniform)
        return json{{"kind", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
    return json{{"kind", "constant"}, {"value", d.value}};
}

WeightDist dist_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "uniform")
        return WeightDist::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
    if (kind == "constant") return WeightDist::constant(j.at("value").get<double>());
    throw SpecError("unknown weight distribution kind '" + kind + "'");
}

std::string model_name(ModelKind m) {
    switch (m) {
    case ModelKind::Izhikevich: return "izhikevich";
    case ModelKind::PoissonSource: return "poisson";
    case ModelKind::CondLif: return "cond_lif";
    }
    return "?";
}

json population_to_json(const NeuronPopulation& p) {
    json j{{"name", p.name}, {"size", p.size}, {"model", model_name(p.model)}, {"seed", p.seed}};
    switch (p.model) {
    case ModelKind::Izhikevich: {
        const auto& prm = std::get<IzhikevichParams>(p.params);
        j["params"] = json{{"a", prm.a},
                           {"b", prm.b},
                           {"c", prm.c},
                           {"d", prm.d},
                           {"noiseAmplitude", prm.noiseAmplitude},
                           {"biasCurrent", prm.biasCurrent}};
        break;
    }
    case ModelKind::PoissonSource: {
        const auto& prm = std::get<PoissonParams>(p.params);
        j["params"] = json{{"rateHz", prm.rateHz}};
        break;
    }
    case ModelKind::CondLif: {
        const auto& prm = std::get<CondLifParams>(p.params);
        j["params"] = json{{"tauMMs", prm.tauMMs},       {"eLeakMV", prm.eLeakMV},
                           {"vThreshMV", prm.vThreshMV}, {"vResetMV", prm.vResetMV},
                           {"eExcMV", prm.eExcMV},       {"eInhMV", prm.eInhMV},
                           {"tauSynMs", prm.tauSynMs}};
        break;
    }
    }
    return j;
}

NeuronPopulation population_from_json(const json& j) {
    NeuronPopulation p;
    p.name = j.at("name").get<std::string>();
    p.size = j.at("size").get<std::int32_t>();
    p.seed = j.value("seed", std::uint64_t(0));
    const std::string model = j.at("model").get<std::string>();
    const json& prm = j.at("params");
    if (model == "izhikevich") {
        p.model = ModelKind::Izhikevich;
        IzhikevichParams ip;
        ip.a = prm.at("a").get<std::vector<double>>();
        ip.b = prm.at("b").get<std::vector<double>>();
        ip.c = prm.at("c").get<std::vector<double>>();
        ip.d = prm.at("d").get<std::vector<double>>();
        ip.noiseAmplitude = prm.at("noiseAmplitude").get<std::vector<double>>();
        ip.biasCurrent = prm.value("biasCurrent", std::vector<double>(ip.a.size(), 0.0));
        p.params = std::move(ip);
    } else if (model == "poisson") {
        p.model = ModelKind::PoissonSource;
        p.params = PoissonParams{prm.at("rateHz").get<double>()};
    } else if (model == "cond_lif") {
        p.model = ModelKind::CondLif;
        CondLifParams lp;
        lp.tauMMs = prm.at("tauMMs").get<double>();
        lp.eLeakMV = prm.at("eLeakMV").get<double>();
        lp.vThreshMV = prm.at("vThreshMV").get<double>();
        lp.vResetMV = prm.at("vResetMV").get<double>();
        lp.eExcMV = prm.at("eExcMV").get<double>();
        lp.eInhMV = prm.at("eInhMV").get<double>();
        lp.tauSynMs = prm.at("tauSynMs").get<double>();
        p.params = lp;
    } else {
        throw SpecError("unknown neuron model '" + model + "'");
    }
    return p;
}

json group_to_json(const SynapseGroupSpec& g) {
    return json{{"name", g.name},
                {"pre", g.pre},
                {"post", g.post},
                {"sign", g.sign == SynapseSign::Inhibitory ? "inhibitory" : "excitatory"},
                {"outDegree", g.outDegree},
                {"baseWeight", dist_to_json(g.baseWeight)},
                {"gScale", g.gScale},
                {"storage", g.storage == StorageKind::Dense ? "dense" : "sparse"},
                {"preOffset", g.preOffset},
                {"preCount", g.preCount}};
}

SynapseGroupSpec group_from_json(const json& j) {
    SynapseGroupSpec g;
    g.name = j.at("name").get<std::string>();
    g.pre = j.at("pre").get<std::string>();
    g.post = j.at("post").get<std::string>();
    const std::string sign = j.at("sign").get<std::string>();
    if (sign == "excitatory")
        g.sign = SynapseSign::Excitatory;
    else if (sign == "inhibitory")
        g.sign = SynapseSign::Inhibitory;
    else
        throw SpecError("unknown synapse sign '" + sign + "' (use excitatory|inhibitory)");
    g.outDegree = j.at("outDegree").get<std::int32_t>();
    g.baseWeight = dist_from_json(j.at("baseWeight"));
    g.gScale = j.at("gScale").get<double>();
    const std::string storage = j.value("storage", std::string("sparse"));
    if (storage == "dense")
        g.storage = StorageKind::Dense;
    else if (storage == "sparse")
        g.storage = StorageKind::Sparse;
    else
        throw SpecError("unknown storage kind '" + storage + "' (use dense|sparse)");
    g.preOffset = j.value("preOffset", 0);
    g.preCount = j.value("preCount", -1);
    return g;
}

json network_to_json_obj(const NetworkSpec& spec) {
    json pops = json::array();
    for (const auto& p : spec.populations) pops.push_back(population_to_json(p));
    json groups = json::array();
    for (const auto& g : spec.synapses) groups.push_back(group_to_json(g));
    return json{{"dtMs", spec.dtMs},
                {"durationMs", spec.durationMs},
                {"globalSeed", spec.globalSeed},
                {"populations", std::move(pops)},
                {"synapses", std::move(groups)}};
}

NetworkSpec network_from_json_obj(const json& j) {
    NetworkSpec spec;
    spec.dtMs = j.value("dtMs", 1.0);
    spec.durationMs = j.value("durationMs", 1000.0);
    spec.globalSeed = j.value("globalSeed", std::uint64_t(0));
    for (const auto& p : j.at("populations")) spec.populations.push_back(population_from_json(p));
    if (j.contains("synapses"))
        for (const auto& g : j.at("synapses")) spec.synapses.push_back(group_from_json(g));
    return spec;
}

json parse_json(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw SpecError(std::string(what) + ": malformed JSON");
    return j;
}

}  // namespace

std::string network_to_json(const NetworkSpec& spec) {
    return network_to_json_obj(spec).dump(2) + "\n";
}

NetworkSpec network_from_json(const std::string& text) {
    try {
        return network_from_json_obj(parse_json(text, "network spec"));
    } catch (const json::exception& e) {
        throw SpecError(std::string("network spec JSON: ") + e.what());
    }
}

NetworkSpec load_network(const std::string& path) { return network_from_json(read_file(path)); }

// ---------------------------------------------------------------------------
// connectivity
// ---------------------------------------------------------------------------

std::string dense_to_json(const DenseMatrix& m) {
    check_dense(m);
    json j{{"nPre", m.nPre}, {"nPost", m.nPost}, {"weights", json::array()}};
    auto& w = j["weights"];
    for (scalar v : m.weights) w.push_back(static_cast<double>(v));
    return j.dump() + "\n";
}

std::string sparse_to_json(const CrsMatrix& m) {
    check_crs(m);
    json j{{"nPre", m.nPre},
           {"nPost", m.nPost},
           {"gValues", json::array()},
           {"postInd", m.postInd},
           {"rowStart", m.rowStart}};
    auto& g = j["gValues"];
    for (scalar v : m.gValues) g.push_back(static_cast<double>(v));
    return j.dump() + "\n";
}

DenseMatrix dense_from_json(const std::string& text) {
    try {
        const json j = parse_json(text, "dense matrix");
        DenseMatrix m;
        m.nPre = j.at("nPre").get<std::int32_t>();
        m.nPost = j.at("nPost").get<std::int32_t>();
        for (const auto& v : j.at("weights")) m.weights.push_back(static_cast<scalar>(v.get<double>()));
        check_dense(m);
        return m;
    } catch (const json::exception& e) {
        throw SpecError(std::string("dense matrix JSON: ") + e.what());
    }
}

CrsMatrix sparse_from_json(const std::string& text) {
    try {
        const json j = parse_json(text, "sparse matrix");
        CrsMatrix m;
        m.nPre = j.at("nPre").get<std::int32_t>();
        m.nPost = j.at("nPost").get<std::int32_t>();
        for (const auto& v : j.at("gValues")) m.gValues.push_back(static_cast<scalar>(v.get<double>()));
        m.postInd = j.at("postInd").get<std::vector<std::int32_t>>();
        m.rowStart = j.at("rowStart").get<std::vector<std::int64_t>>();
        check_crs(m);
        return m;
    } catch (const json::exception& e) {
        throw SpecError(std::string("sparse matrix JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// simulation output
// ---------------------------------------------------------------------------

std::string raster_to_csv(const Raster& raster) {
    std::string out = "step,population,neuron\n";
    for (const auto& e : raster.events) {
        out += std::to_string(e.step);
        out += ',';
        out += raster.populations[e.population].name;
        out += ',';
        out += std::to_string(e.neuron);
        out += '\n';
    }
    return out;
}

std::string run_summary_to_json(const NetworkSpec& spec, const RunResult& result,
                                StorageMode mode) {
    json rates;
    for (const auto& [name, rate] : result.avgSpike) rates[name] = rate;
    json sizes;
    for (const auto& p : result.raster.populations) sizes[p.name] = p.size;
    const char* storage = mode == StorageMode::ForceDense    ? "dense"
                          : mode == StorageMode::ForceSparse ? "sparse"
                                                             : "spec";
    return json{{"avgSpike", std::move(rates)},
                {"sumNaNs", result.sumNaNs},
                {"steps", result.steps},
                {"spikes", result.raster.events.size()},
                {"dtMs", spec.dtMs},
                {"durationMs", spec.durationMs},
                {"globalSeed", spec.globalSeed},
                {"populations", std::move(sizes)},
                {"storage", storage},
                {"wallTimeMs", result.wallTimeMs}}
               .dump(2) +
           "\n";
}

// ---------------------------------------------------------------------------
// calibration
// ---------------------------------------------------------------------------

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "nConn,gScale,avgSpike,sumNaNs\n";
    for (const auto& r : rows) {
        out += std::to_string(r.nConn);
        out += ',';
        out += format_double(r.gScale);
        out += ',';
        out += format_double(r.failed ? std::numeric_limits<double>::quiet_NaN() : r.avgSpike);
        out += ',';
        out += std::to_string(r.failed ? std::int64_t(-1) : r.sumNaNs);
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(const std::string& s, int lineNo) {
    double v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw SpecError("CSV line " + std::to_string(lineNo) + ": '" + s + "' is not a number");
    return v;
}

std::int64_t parse_int(const std::string& s, int lineNo) {
    std::int64_t v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw SpecError("CSV line " + std::to_string(lineNo) + ": '" + s + "' is not an integer");
    return v;
}

}  // namespace

std::vector<SweepRow> sweep_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "nConn,gScale,avgSpike,sumNaNs")
        throw SpecError("sweep CSV must start with header 'nConn,gScale,avgSpike,sumNaNs'");
    std::vector<SweepRow> rows;
    int lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 4)
            throw SpecError("CSV line " + std::to_string(lineNo) + ": expected 4 fields, got " +
                            std::to_string(f.size()));
        SweepRow r;
        r.nConn = static_cast<std::int32_t>(parse_int(f[0], lineNo));
        r.gScale = parse_double(f[1], lineNo);
        r.avgSpike = parse_double(f[2], lineNo);
        r.sumNaNs = parse_int(f[3], lineNo);
        if (r.sumNaNs < 0) {
            r.failed = true;
            r.error = "recorded as failed in CSV";
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string optima_to_csv(const std::vector<OptimumRow>& rows) {
    std::string out = "nConn,gScale\n";
    for (const auto& r : rows) {
        out += std::to_string(r.nConn);
        out += ',';
        out += format_double(r.gScale);
        out += '\n';
    }
    return out;
}

std::string fit_to_json(const FitResult& fit) {
    return json{{"k1", fit.k1},
                {"k2", fit.k2},
                {"k3", fit.k3},
                {"sse", fit.sse},
                {"mapePercent", fit.mapePercent},  // NaN serialises as null
                {"converged", fit.converged},
                {"iterations", fit.iterations}}
               .dump(2) +
           "\n";
}

FitResult fit_from_json(const std::string& text) {
    try {
        const json j = parse_json(text, "fit result");
        FitResult f;
        f.k1 = j.at("k1").get<double>();
        f.k2 = j.at("k2").get<double>();
        f.k3 = j.at("k3").get<double>();
        f.sse = j.value("sse", 0.0);
        f.mapePercent = j.contains("mapePercent") && j["mapePercent"].is_number()
                            ? j["mapePercent"].get<double>()
                            : std::numeric_limits<double>::quiet_NaN();
        f.converged = j.value("converged", false);
        f.iterations = j.value("iterations", 0);
        return f;
    } catch (const json::exception& e) {
        throw SpecError(std::string("fit JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// occupancy
// ---------------------------------------------------------------------------

namespace {

json limit_or_null(std::int64_t v) {
    if (v == kUnlimited) return nullptr;
    return v;
}

}  // namespace

std::string occupancy_to_json(const DeviceSpec& dev, const KernelSpec& kernel,
                              const OccupancyResult& res) {
    json limiters = json::array();
    for (Limiter l : res.limiters) limiters.push_back(to_string(l));
    return json{{"device",
                 {{"name", dev.name},
                  {"warpSize", dev.warpSize},
                  {"maxWarpsPerSM", dev.maxWarpsPerSM},
                  {"maxBlocksPerSM", dev.maxBlocksPerSM},
                  {"maxThreadsPerBlock", dev.maxThreadsPerBlock},
                  {"sharedMemPerSM", dev.sharedMemPerSM},
                  {"regsPerSM", dev.regsPerSM},
                  {"regAllocUnit", dev.regAllocUnit},
                  {"sharedAllocUnit", dev.sharedAllocUnit}}},
                {"kernel",
                 {{"threadsPerBlock", kernel.threadsPerBlock},
                  {"regsPerThread", kernel.regsPerThread},
                  {"sharedMemPerBlock", kernel.sharedMemPerBlock}}},
                {"warpsPerBlock", res.warpsPerBlock},
                {"limits",
                 {{"warps", res.limitWarps},
                  {"blocks", res.limitBlocks},
                  {"shared", limit_or_null(res.limitShared)},
                  {"registers", limit_or_null(res.limitRegs)}}},
                {"activeBlocks", res.activeBlocks},
                {"activeWarps", res.activeWarps},
                {"occupancy", res.occupancy},
                {"limiters", std::move(limiters)}}
               .dump(2) +
           "\n";
}

DeviceSpec device_from_json(const std::string& text) {
    try {
        const json j = parse_json(text, "device spec");
        DeviceSpec d;
        d.name = j.value("name", std::string("custom"));
        d.warpSize = j.at("warpSize").get<std::int64_t>();
        d.maxWarpsPerSM = j.at("maxWarpsPerSM").get<std::int64_t>();
        d.maxBlocksPerSM = j.at("maxBlocksPerSM").get<std::int64_t>();
        d.maxThreadsPerBlock = j.at("maxThreadsPerBlock").get<std::int64_t>();
        d.sharedMemPerSM = j.at("sharedMemPerSM").get<std::int64_t>();
        d.regsPerSM = j.at("regsPerSM").get<std::int64_t>();
        d.regAllocUnit = j.at("regAllocUnit").get<std::int64_t>();
        d.sharedAllocUnit = j.at("sharedAllocUnit").get<std::int64_t>();
        check_device(d);
        return d;
    } catch (const json::exception& e) {
        throw SpecError(std::string("device spec JSON: ") + e.what());
    }
}

DeviceSpec load_device(const std::string& path) { return device_from_json(read_file(path)); }

}  // namespace synscale
