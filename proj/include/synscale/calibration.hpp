#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "synscale/engine.hpp"

namespace synscale {

// One cell of a sweep. A row that failed to build or run carries
// failed=true with the error text; its avgSpike is NaN and its sumNaNs -1
// (the same sentinel encoding used in the CSV output).
struct SweepRow {
    std::int32_t nConn = 0;
    double gScale = 0.0;
    double avgSpike = 0.0;
    std::int64_t sumNaNs = 0;
    bool failed = false;
    std::string error;
};

// Builds the network for one sweep cell. Must be a pure function of its
// arguments (cells run on worker threads).
using TemplateBuilder = std::function<NetworkSpec(std::int32_t nConn, double gScale)>;

struct SweepRequest {
    std::vector<std::int32_t> nConnValues;
    std::vector<double> gScaleValues;
    std::string targetPopulation;  // population whose rate is recorded
    int parallelism = 1;
    StorageMode storage = StorageMode::FromSpec;
    // optional progress hook, called after each finished cell (thread-safe
    // on the caller's side not required: invoked under an internal mutex)
    std::function<void(const SweepRow&, std::size_t done, std::size_t total)> onCell;
};

// Runs every (nConn, gScale) grid cell; one row per cell, sorted by
// (nConn, gScale) ascending. Duplicate grid values are collapsed. A cell
// failure is recorded in its row instead of aborting the sweep.
std::vector<SweepRow> sweep(const TemplateBuilder& builder, const SweepRequest& req);

struct OptimumRow {
    std::int32_t nConn = 0;
    double gScale = 0.0;
    double avgSpike = 0.0;
};

struct SelectionResult {
    std::vector<OptimumRow> optima;          // per nConn, sorted by nConn
    double referenceAvgSpike = 0.0;          // rate of the reference cell
    std::vector<SweepRow> excluded;          // NaN-contaminated or failed rows
    std::vector<std::int32_t> omittedNConn;  // nConn values with no usable row
};

// Picks, for every nConn, the gScale whose firing rate comes closest to the
// reference cell's rate. Rows with sumNaNs != 0, failed rows and non-finite
// rates are excluded; ties in the rate distance resolve to the smaller
// gScale. The reference cell (refNConn, refGScale) must be present, usable
// and NaN-free, otherwise a SpecError names it.
SelectionResult select_optima(const std::vector<SweepRow>& rows, std::int32_t refNConn,
                              double refGScale);

// ---------------------------------------------------------------------------
// Hyperbolic model g(n) = k1 / (k2 + n) + k3
// ---------------------------------------------------------------------------

struct FitPoint {
    double x = 0.0;  // nConn
    double y = 0.0;  // optimal gScale
};

struct FitResult {
    double k1 = 0.0;
    double k2 = 0.0;
    double k3 = 0.0;
    double sse = 0.0;          // sum of squared residuals at the solution
    double mapePercent = 0.0;  // NaN when some y is 0 (percentage undefined)
    bool converged = false;
    int iterations = 0;  // iterations of the winning start
};

// Least-squares fit of the three model parameters by Levenberg-Marquardt
// from several deterministic starts (the model is nonlinear in k2, and a
// single start can stall on the pole). Needs >= 4 points with distinct x.
// All-equal y values short-circuit to the exact flat solution
// (k1=0, k2=1, k3=y).
FitResult fit_gscale(std::vector<FitPoint> points);

// Model evaluation; throws SpecError on the pole k2 + nConn == 0.
double predict(const FitResult& fit, double nConn);

// Mean absolute percentage error of the fit over the given points.
// Throws SpecError when empty or when any y is exactly 0.
double mape(const FitResult& fit, const std::vector<FitPoint>& points);

}  // namespace synscale
