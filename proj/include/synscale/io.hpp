#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synscale/calibration.hpp"
#include "synscale/engine.hpp"
#include "synscale/network.hpp"
#include "synscale/occupancy.hpp"

namespace synscale {

// Shortest decimal form that round-trips the value exactly; "nan"/"inf"
// for non-finite values. Keeps CSV and JSON output byte-stable across runs.
std::string format_double(double v);

// --- network specs ---------------------------------------------------------

std::string network_to_json(const NetworkSpec& spec);
NetworkSpec network_from_json(const std::string& text);
NetworkSpec load_network(const std::string& path);

// --- connectivity ----------------------------------------------------------

std::string dense_to_json(const DenseMatrix& m);
std::string sparse_to_json(const CrsMatrix& m);
DenseMatrix dense_from_json(const std::string& text);
CrsMatrix sparse_from_json(const std::string& text);

// --- simulation output -----------------------------------------------------

// CSV with header "step,population,neuron"; population by name.
std::string raster_to_csv(const Raster& raster);

// Summary of one run as JSON (rates, NaN count, steps, timing).
std::string run_summary_to_json(const NetworkSpec& spec, const RunResult& result,
                                StorageMode mode);

// --- calibration -----------------------------------------------------------

// CSV with header "nConn,gScale,avgSpike,sumNaNs". Failed rows are encoded
// with avgSpike=nan and sumNaNs=-1 and decoded back to failed=true.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> sweep_from_csv(const std::string& text);

// CSV with header "nConn,gScale".
std::string optima_to_csv(const std::vector<OptimumRow>& rows);

std::string fit_to_json(const FitResult& fit);
FitResult fit_from_json(const std::string& text);

// --- occupancy -------------------------------------------------------------

std::string occupancy_to_json(const DeviceSpec& dev, const KernelSpec& kernel,
                              const OccupancyResult& res);
DeviceSpec device_from_json(const std::string& text);
DeviceSpec load_device(const std::string& path);

// --- helpers ---------------------------------------------------------------

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace synscale
