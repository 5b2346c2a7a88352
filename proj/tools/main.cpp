// Command-line front end: simulate, calibrate, occupancy, mem-report,
// validate. Exit codes: 0 success, 2 user/config error, 1 internal error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "synscale/calibration.hpp"
#include "synscale/engine.hpp"
#include "synscale/io.hpp"
#include "synscale/network.hpp"
#include "synscale/occupancy.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace synscale;

namespace {

json load_json(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw SpecError("'" + path + "' is not valid JSON");
    return j;
}

StorageMode storage_mode(const std::string& s) {
    if (s.empty() || s == "spec") return StorageMode::FromSpec;
    if (s == "dense") return StorageMode::ForceDense;
    if (s == "sparse") return StorageMode::ForceSparse;
    throw SpecError("unknown storage '" + s + "' (use dense|sparse)");
}

std::string resolve_output(const std::string& flag, const json& cfg) {
    if (!flag.empty()) return flag;
    if (cfg.contains("output")) return cfg.at("output").get<std::string>();
    if (const char* env = std::getenv("SYNSCALE_OUTPUT_DIR"); env && *env) return env;
    return ".";
}

// --- network section of an experiment config -------------------------------

IzhBuildOptions izh_options(const json& net) {
    IzhBuildOptions o;
    o.dtMs = net.value("dtMs", o.dtMs);
    o.durationMs = net.value("durationMs", o.durationMs);
    o.noiseExc = net.value("noiseExc", o.noiseExc);
    o.noiseInh = net.value("noiseInh", o.noiseInh);
    o.excWeightHi = net.value("excWeightHi", o.excWeightHi);
    o.inhWeightHi = net.value("inhWeightHi", o.inhWeightHi);
    o.biasCurrent = net.value("biasCurrent", o.biasCurrent);
    const std::string st = net.value("storage", std::string("sparse"));
    if (st == "dense")
        o.storage = StorageKind::Dense;
    else if (st == "sparse")
        o.storage = StorageKind::Sparse;
    else
        throw SpecError("network.storage must be dense|sparse, got '" + st + "'");
    return o;
}

MBodyBuildOptions mbody_options(const json& net) {
    MBodyBuildOptions o;
    o.dtMs = net.value("dtMs", o.dtMs);
    o.durationMs = net.value("durationMs", o.durationMs);
    o.pnRateHz = net.value("pnRateHz", o.pnRateHz);
    o.pnKcOutFraction = net.value("pnKcOutFraction", o.pnKcOutFraction);
    o.pnKcWeightHi = net.value("pnKcWeightHi", o.pnKcWeightHi);
    o.pnLhiWeight = net.value("pnLhiWeight", o.pnLhiWeight);
    o.lhiKcWeight = net.value("lhiKcWeight", o.lhiKcWeight);
    o.kcDnWeight = net.value("kcDnWeight", o.kcDnWeight);
    if (net.contains("lif")) {
        const json& l = net.at("lif");
        o.lif.tauMMs = l.value("tauMMs", o.lif.tauMMs);
        o.lif.eLeakMV = l.value("eLeakMV", o.lif.eLeakMV);
        o.lif.vThreshMV = l.value("vThreshMV", o.lif.vThreshMV);
        o.lif.vResetMV = l.value("vResetMV", o.lif.vResetMV);
        o.lif.eExcMV = l.value("eExcMV", o.lif.eExcMV);
        o.lif.eInhMV = l.value("eInhMV", o.lif.eInhMV);
        o.lif.tauSynMs = l.value("tauSynMs", o.lif.tauSynMs);
    }
    return o;
}

template <typename T>
T require_field(const json& j, const char* key, const char* ctx) {
    if (!j.contains(key))
        throw SpecError(std::string(ctx) + " is missing required field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw SpecError(std::string(ctx) + " field '" + key + "' has the wrong type");
    }
}

std::map<std::string, double> gscales_field(const json& net) {
    const json g = require_field<json>(net, "gScales", "mbody network");
    if (!g.is_object()) throw SpecError("network.gScales must be an object of group -> gScale");
    std::map<std::string, double> out;
    for (const auto& [k, v] : g.items()) out[k] = v.get<double>();
    return out;
}

// Networks described by a builder shorthand can be re-instantiated per
// sweep cell; a literal spec cannot (nothing says which knob is nConn).
struct ConfiguredNetwork {
    NetworkSpec spec;
    TemplateBuilder builder;  // empty when the network is a literal spec
};

ConfiguredNetwork configure_network(const json& net, const std::string& scaledGroup) {
    const std::string kind = require_field<std::string>(net, "kind", "network");
    ConfiguredNetwork out;
    if (kind == "izhikevich") {
        const auto nNeurons = require_field<std::int32_t>(net, "nNeurons", "izhikevich network");
        const auto nConn = require_field<std::int32_t>(net, "nConn", "izhikevich network");
        const double excFraction = net.value("excFraction", 0.8);
        const double gScale = net.value("gScale", 1.0);
        const auto seed = net.value("seed", std::uint64_t(0));
        const IzhBuildOptions opt = izh_options(net);
        out.builder = [=](std::int32_t n, double g) {
            return build_izhikevich_net(nNeurons, n, excFraction, g, seed, opt);
        };
        out.spec = out.builder(nConn, gScale);
    } else if (kind == "mbody") {
        const auto nPN = require_field<std::int32_t>(net, "nPN", "mbody network");
        const auto nLHI = require_field<std::int32_t>(net, "nLHI", "mbody network");
        const auto nKC = require_field<std::int32_t>(net, "nKC", "mbody network");
        const auto nDN = require_field<std::int32_t>(net, "nDN", "mbody network");
        const auto gScales = gscales_field(net);
        const auto seed = net.value("seed", std::uint64_t(0));
        const MBodyBuildOptions opt = mbody_options(net);
        const std::string scaled = scaledGroup.empty() ? "pn_kc" : scaledGroup;
        out.builder = [=](std::int32_t n, double g) {
            auto gs = gScales;
            if (!gs.count(scaled))
                throw SpecError("sweep.scaledGroup '" + scaled + "' is not a gScales entry");
            gs[scaled] = g;
            return build_mbody_net(n, nLHI, nKC, nDN, gs, seed, opt);
        };
        out.spec = build_mbody_net(nPN, nLHI, nKC, nDN, gScales, seed, opt);
    } else if (kind == "spec") {
        out.spec = network_from_json(require_field<json>(net, "spec", "network").dump());
    } else {
        throw SpecError("unknown network kind '" + kind + "' (use izhikevich|mbody|spec)");
    }
    return out;
}

// Accepts either an experiment config ({"network": ...}) or a bare network
// spec ({"populations": ...}).
ConfiguredNetwork network_of_config(const json& cfg, std::uint64_t* seedOverride) {
    json net;
    if (cfg.contains("network"))
        net = cfg.at("network");
    else if (cfg.contains("populations"))
        net = json{{"kind", "spec"}, {"spec", cfg}};
    else
        throw SpecError("config needs a 'network' section or a bare network spec");
    if (seedOverride) {
        if (net.value("kind", std::string()) == "spec")
            net["spec"]["globalSeed"] = *seedOverride;
        else
            net["seed"] = *seedOverride;
    }
    return configure_network(net, cfg.contains("sweep")
                                      ? cfg.at("sweep").value("scaledGroup", std::string())
                                      : std::string());
}

// --- subcommand bodies ------------------------------------------------------

int cmd_simulate(const std::string& configPath, const std::string& storage,
                 const std::string& outFlag, bool haveSeed, std::uint64_t seed) {
    const json cfg = load_json(configPath);
    ConfiguredNetwork net = network_of_config(cfg, haveSeed ? &seed : nullptr);
    require_valid(net.spec);

    const StorageMode mode = storage_mode(storage);
    const RunResult res = run(net.spec, mode);

    const std::string outDir = resolve_output(outFlag, cfg);
    fs::create_directories(outDir);
    const std::string rasterPath = (fs::path(outDir) / "raster.csv").string();
    const std::string summaryPath = (fs::path(outDir) / "summary.json").string();
    write_file(rasterPath, raster_to_csv(res.raster));
    write_file(summaryPath, run_summary_to_json(net.spec, res, mode));

    for (const auto& [name, rate] : res.avgSpike)
        std::cout << name << ": avgSpike " << format_double(rate) << " Hz\n";
    if (res.sumNaNs > 0)
        std::cerr << "warning: sumNaNs=" << res.sumNaNs
                  << " neuron(s) reached non-finite state; their dynamics are meaningless\n";
    std::cout << "wrote " << rasterPath << " and " << summaryPath << "\n";
    return 0;
}

int cmd_calibrate(const std::string& configPath, const std::string& storage,
                  const std::string& outFlag, int parallelismFlag, bool quiet) {
    const json cfg = load_json(configPath);
    if (!cfg.contains("sweep")) throw SpecError("calibrate config needs a 'sweep' section");
    const json& sw = cfg.at("sweep");

    ConfiguredNetwork net = network_of_config(cfg, nullptr);
    if (!net.builder)
        throw SpecError("calibrate needs a parameterised network (kind izhikevich or mbody); a "
                        "literal spec has no nConn knob to sweep");

    SweepRequest req;
    req.nConnValues = require_field<std::vector<std::int32_t>>(sw, "nConnValues", "sweep");
    req.gScaleValues = require_field<std::vector<double>>(sw, "gScaleValues", "sweep");
    req.targetPopulation = require_field<std::string>(sw, "targetPopulation", "sweep");
    req.parallelism = parallelismFlag > 0 ? parallelismFlag : cfg.value("parallelism", 1);
    req.storage = storage_mode(storage);
    const auto refNConn = require_field<std::int32_t>(sw, "refNConn", "sweep");
    const auto refGScale = require_field<double>(sw, "refGScale", "sweep");
    if (!quiet)
        req.onCell = [](const SweepRow& r, std::size_t done, std::size_t total) {
            std::cerr << "[" << done << "/" << total << "] nConn=" << r.nConn
                      << " gScale=" << format_double(r.gScale);
            if (r.failed)
                std::cerr << " FAILED: " << r.error;
            else
                std::cerr << " avgSpike=" << format_double(r.avgSpike) << " sumNaNs=" << r.sumNaNs;
            std::cerr << "\n";
        };

    const std::vector<SweepRow> rows = sweep(net.builder, req);

    const std::string outDir = resolve_output(outFlag, cfg);
    fs::create_directories(outDir);
    const std::string sweepPath = (fs::path(outDir) / "simulation_result.out").string();
    write_file(sweepPath, sweep_to_csv(rows));

    const SelectionResult sel = select_optima(rows, refNConn, refGScale);
    if (!sel.excluded.empty()) {
        std::cerr << "warning: excluded " << sel.excluded.size()
                  << " sweep cell(s) (sumNaNs != 0 or failed):\n";
        for (const auto& r : sel.excluded) {
            std::cerr << "  nConn=" << r.nConn << " gScale=" << format_double(r.gScale);
            if (r.failed)
                std::cerr << " error: " << r.error << "\n";
            else
                std::cerr << " sumNaNs=" << r.sumNaNs << "\n";
        }
    }
    for (std::int32_t n : sel.omittedNConn)
        std::cerr << "warning: nConn=" << n
                  << " has no cell with sumNaNs == 0; it is omitted from the fit\n";

    const std::string optimaPath = (fs::path(outDir) / "optima.csv").string();
    write_file(optimaPath, optima_to_csv(sel.optima));

    const std::string fitPath = (fs::path(outDir) / "fit.json").string();
    if (sel.optima.size() < 4) {
        json skipped{{"k1", nullptr},       {"k2", nullptr},    {"k3", nullptr},
                     {"sse", nullptr},      {"mapePercent", nullptr},
                     {"converged", false},  {"iterations", 0},
                     {"skippedReason", "fit needs at least 4 optima, got " +
                                           std::to_string(sel.optima.size())}};
        write_file(fitPath, skipped.dump(2) + "\n");
        std::cerr << "note: fit skipped, only " << sel.optima.size() << " optima available\n";
    } else {
        std::vector<FitPoint> pts;
        for (const auto& o : sel.optima)
            pts.push_back({static_cast<double>(o.nConn), o.gScale});
        const FitResult fit = fit_gscale(pts);
        write_file(fitPath, fit_to_json(fit));
        std::cout << "fit: k1=" << format_double(fit.k1) << " k2=" << format_double(fit.k2)
                  << " k3=" << format_double(fit.k3) << " sse=" << format_double(fit.sse)
                  << " mape=" << format_double(fit.mapePercent) << "%"
                  << (fit.converged ? "" : " (NOT converged)") << "\n";
        if (!fit.converged)
            std::cerr << "warning: fit did not converge; inspect " << fitPath << "\n";
    }
    std::cout << "wrote " << sweepPath << ", " << optimaPath << " and " << fitPath << "\n";
    return 0;
}

int cmd_occupancy(const std::string& device, const std::string& deviceFile, std::int64_t threads,
                  std::int64_t regs, std::int64_t shared, bool recommend) {
    if (device.empty() == deviceFile.empty())
        throw SpecError("give exactly one of --device or --device-file");
    const DeviceSpec dev = device.empty() ? load_device(deviceFile) : device_preset(device);
    if (recommend) {
        const auto [size, res] = recommend_block_size(dev, regs, shared);
        json j = json::parse(occupancy_to_json(dev, {size, regs, shared}, res));
        j["recommendedBlockSize"] = size;
        std::cout << j.dump(2) << "\n";
    } else {
        if (threads < 1)
            throw SpecError("--threads is required (and must be >= 1) unless --recommend is given");
        const KernelSpec k{threads, regs, shared};
        std::cout << occupancy_to_json(dev, k, occupancy(dev, k));
    }
    return 0;
}

int cmd_mem_report(std::int64_t nPre, std::int64_t nPost, std::int64_t nConn,
                   std::int64_t bytesPerElement) {
    if (nPre < 1 || nPost < 1)
        throw SpecError("nPre and nPost must be >= 1");
    if (nConn < 1 || nConn > nPost)
        throw SpecError("nConn must satisfy 1 <= nConn <= nPost, got nConn=" +
                        std::to_string(nConn) + " with nPost=" + std::to_string(nPost));
    if (bytesPerElement < 0) throw SpecError("--bytes-per-element must be >= 0");
    const std::uint64_t nNZ = static_cast<std::uint64_t>(nPre) * static_cast<std::uint64_t>(nConn);
    const std::uint64_t sparse = mem_sparse_elements(nNZ, static_cast<std::uint64_t>(nPost));
    const std::uint64_t dense = mem_dense_elements(static_cast<std::uint64_t>(nPre),
                                                   static_cast<std::uint64_t>(nPost));
    json j{{"nPre", nPre},
           {"nPost", nPost},
           {"nConn", nConn},
           {"nNZ", nNZ},
           {"sparseElements", sparse},
           {"denseElements", dense},
           {"sparseToDenseRatio", static_cast<double>(sparse) / static_cast<double>(dense)},
           {"rowOffsetNote",
            "the sparse count charges one offset entry per post-synaptic neuron (nPost); the "
            "stored row-offset array actually has nPre+1 entries"}};
    if (bytesPerElement > 0) {
        j["bytesPerElement"] = bytesPerElement;
        j["sparseBytes"] = sparse * static_cast<std::uint64_t>(bytesPerElement);
        j["denseBytes"] = dense * static_cast<std::uint64_t>(bytesPerElement);
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_validate(const std::string& configPath) {
    const json cfg = load_json(configPath);
    NetworkSpec spec = network_of_config(cfg, nullptr).spec;
    const auto violations = validate(spec);
    if (violations.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    for (const auto& v : violations) std::cout << v.field << ": " << v.message << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic spiking-network simulation and scaling toolkit"};
    app.require_subcommand(1);

    std::string configPath, storage, outDir;
    std::uint64_t seed = 0;
    int parallelism = 0;
    bool quiet = false;

    auto* sim = app.add_subcommand("simulate", "run one network and write raster.csv + summary.json");
    sim->add_option("config", configPath, "experiment config or network spec (JSON)")->required();
    sim->add_option("--storage", storage, "force connectivity storage: dense|sparse");
    auto* seedOpt = sim->add_option("--seed", seed, "override the global seed");
    sim->add_option("--output", outDir, "output directory");

    auto* cal = app.add_subcommand(
        "calibrate", "sweep (nConn, gScale), select per-nConn optima and fit the scaling curve");
    cal->add_option("config", configPath, "experiment config with a sweep section (JSON)")
        ->required();
    cal->add_option("--storage", storage, "force connectivity storage: dense|sparse");
    cal->add_option("--parallelism", parallelism, "worker threads (overrides the config)");
    cal->add_option("--output", outDir, "output directory");
    cal->add_flag("--quiet", quiet, "suppress per-cell progress output");

    std::string device, deviceFile;
    std::int64_t threads = 0, regs = 0, shared = 0;
    bool recommend = false;
    auto* occ = app.add_subcommand("occupancy", "per-SM occupancy of a kernel configuration");
    occ->add_option("--device", device, "device preset (cc20, cc30, cc50)");
    occ->add_option("--device-file", deviceFile, "JSON device spec");
    occ->add_option("--threads", threads, "threads per block");
    occ->add_option("--regs", regs, "registers per thread (0 = unconstrained)");
    occ->add_option("--shared", shared, "shared memory per block, bytes (0 = unconstrained)");
    occ->add_flag("--recommend", recommend, "scan block sizes for the best occupancy");

    std::int64_t nPre = 0, nPost = 0, nConn = 0, bytesPerElement = 0;
    auto* mem = app.add_subcommand("mem-report",
                                   "sparse vs dense storage footprint for fixed out-degree "
                                   "connectivity");
    mem->add_option("--nPre", nPre, "pre-synaptic population size")->required();
    mem->add_option("--nPost", nPost, "post-synaptic population size")->required();
    mem->add_option("--nConn", nConn, "out-degree per pre-synaptic neuron")->required();
    mem->add_option("--bytes-per-element", bytesPerElement, "also report byte totals");

    auto* val = app.add_subcommand("validate", "check a network spec and list violations");
    val->add_option("config", configPath, "experiment config or network spec (JSON)")->required();

    try {
        app.parse(argc, argv);
        if (sim->parsed())
            return cmd_simulate(configPath, storage, outDir, seedOpt->count() > 0, seed);
        if (cal->parsed()) return cmd_calibrate(configPath, storage, outDir, parallelism, quiet);
        if (occ->parsed()) return cmd_occupancy(device, deviceFile, threads, regs, shared, recommend);
        if (mem->parsed()) return cmd_mem_report(nPre, nPost, nConn, bytesPerElement);
        if (val->parsed()) return cmd_validate(configPath);
        return 2;  // unreachable: require_subcommand(1)
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // --help exits 0, bad usage exits 2
    } catch (const SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
