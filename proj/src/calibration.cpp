#include "synscale/calibration.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace synscale {

std::vector<SweepRow> sweep(const TemplateBuilder& builder, const SweepRequest& req) {
    if (!builder) throw SpecError("sweep needs a network builder");
    if (req.nConnValues.empty()) throw SpecError("sweep needs at least one nConn value");
    if (req.gScaleValues.empty()) throw SpecError("sweep needs at least one gScale value");
    if (req.targetPopulation.empty()) throw SpecError("sweep needs a target population name");
    for (double g : req.gScaleValues)
        if (!std::isfinite(g)) throw SpecError("sweep gScale values must be finite");

    std::vector<std::int32_t> ns(req.nConnValues);
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    std::vector<double> gs(req.gScaleValues);
    std::sort(gs.begin(), gs.end());
    gs.erase(std::unique(gs.begin(), gs.end()), gs.end());

    struct Cell {
        std::int32_t nConn;
        double gScale;
    };
    std::vector<Cell> cells;
    cells.reserve(ns.size() * gs.size());
    for (std::int32_t n : ns)
        for (double g : gs) cells.push_back({n, g});

    std::vector<SweepRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> finishedCount{0};
    std::mutex hookMutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            SweepRow row;
            row.nConn = cells[i].nConn;
            row.gScale = cells[i].gScale;
            try {
                NetworkSpec spec = builder(row.nConn, row.gScale);
                RunResult res = run(spec, req.storage);
                auto it = res.avgSpike.find(req.targetPopulation);
                if (it == res.avgSpike.end())
                    throw SpecError("network has no population named '" + req.targetPopulation +
                                    "'");
                row.avgSpike = it->second;
                row.sumNaNs = res.sumNaNs;
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
                row.avgSpike = std::numeric_limits<double>::quiet_NaN();
                row.sumNaNs = -1;
            }
            rows[i] = std::move(row);
            const std::size_t done = finishedCount.fetch_add(1) + 1;
            if (req.onCell) {
                std::lock_guard<std::mutex> lock(hookMutex);
                req.onCell(rows[i], done, cells.size());
            }
        }
    };

    const int workers = std::max(1, req.parallelism);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return rows;  // cell order is already (nConn, gScale) ascending
}

SelectionResult select_optima(const std::vector<SweepRow>& rows, std::int32_t refNConn,
                              double refGScale) {
    const auto refName = "(nConn=" + std::to_string(refNConn) +
                         ", gScale=" + std::to_string(refGScale) + ")";
    const SweepRow* ref = nullptr;
    for (const auto& r : rows)
        if (r.nConn == refNConn && r.gScale == refGScale) {
            ref = &r;
            break;
        }
    if (!ref) throw SpecError("reference cell " + refName + " is not in the sweep results");
    if (ref->failed)
        throw SpecError("reference cell " + refName + " failed to run: " + ref->error);
    if (ref->sumNaNs != 0)
        throw SpecError("reference cell " + refName + " is NaN-contaminated (sumNaNs=" +
                        std::to_string(ref->sumNaNs) + ")");
    if (!std::isfinite(ref->avgSpike))
        throw SpecError("reference cell " + refName + " has a non-finite firing rate");

    SelectionResult out;
    out.referenceAvgSpike = ref->avgSpike;

    std::map<std::int32_t, const SweepRow*> best;
    std::set<std::int32_t> seen;
    for (const auto& r : rows) {
        seen.insert(r.nConn);
        if (r.failed || r.sumNaNs != 0 || !std::isfinite(r.avgSpike)) {
            out.excluded.push_back(r);
            continue;
        }
        auto [it, inserted] = best.emplace(r.nConn, &r);
        if (!inserted) {
            const double dNew = std::abs(r.avgSpike - ref->avgSpike);
            const double dOld = std::abs(it->second->avgSpike - ref->avgSpike);
            // order-independent rule: smaller distance wins, ties go to the
            // smaller gScale
            if (dNew < dOld || (dNew == dOld && r.gScale < it->second->gScale)) it->second = &r;
        }
    }
    for (const auto& [n, r] : best) out.optima.push_back({n, r->gScale, r->avgSpike});
    for (std::int32_t n : seen)
        if (!best.count(n)) out.omittedNConn.push_back(n);
    return out;
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt for g(n) = k1/(k2+n) + k3
// ---------------------------------------------------------------------------

namespace {

// 3x3 linear solve, partial pivoting; false on a (near-)singular system.
bool solve3(double a[3][3], const double b[3], double x[3]) {
    double m[3][4];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) m[i][j] = a[i][j];
        m[i][3] = b[i];
    }
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-300) return false;
        if (piv != col)
            for (int j = col; j < 4; ++j) std::swap(m[piv][j], m[col][j]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int j = col; j < 4; ++j) m[r][j] -= f * m[col][j];
        }
    }
    for (int i = 0; i < 3; ++i) {
        x[i] = m[i][3] / m[i][i];
        if (!std::isfinite(x[i])) return false;
    }
    return true;
}

struct LmOutcome {
    double k1, k2, k3, sse;
    bool converged;
    int iterations;
};

}  // namespace

FitResult fit_gscale(std::vector<FitPoint> points) {
    if (points.size() < 4)
        throw SpecError("fit needs at least 4 points, got " + std::to_string(points.size()));
    for (const auto& p : points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw SpecError("fit points must be finite");
    std::sort(points.begin(), points.end(),
              [](const FitPoint& a, const FitPoint& b) { return a.x < b.x; });
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].x == points[i - 1].x)
            throw SpecError("fit points must have distinct x values (duplicate x=" +
                            std::to_string(points[i].x) + ")");

    const double xMin = points.front().x;
    const double xMax = points.back().x;
    double xMean = 0.0, yMin = points[0].y, yMax = points[0].y;
    for (const auto& p : points) {
        xMean += p.x;
        yMin = std::min(yMin, p.y);
        yMax = std::max(yMax, p.y);
    }
    xMean /= static_cast<double>(points.size());

    auto finish = [&points](FitResult r) {
        // MAPE is reported opportunistically; an exact zero y makes the
        // percentage undefined, which the JSON layer renders as null
        r.mapePercent = std::numeric_limits<double>::quiet_NaN();
        bool ok = true;
        double s = 0.0;
        for (const auto& p : points) {
            const double den = r.k2 + p.x;
            if (p.y == 0.0 || den == 0.0) {
                ok = false;
                break;
            }
            s += std::abs(p.y - (r.k1 / den + r.k3)) / std::abs(p.y);
        }
        if (ok) r.mapePercent = 100.0 * s / static_cast<double>(points.size());
        return r;
    };

    if (yMin == yMax) {
        // flat data: the hyperbola degenerates; fix the documented exact form
        FitResult r;
        r.k1 = 0.0;
        r.k2 = 1.0;
        r.k3 = yMin;
        r.sse = 0.0;
        r.converged = true;
        r.iterations = 0;
        return finish(r);
    }

    // a candidate k2 is unusable when it puts the pole on (or numerically
    // at) one of the sample points
    const double poleEps = 1e-9 * std::max(std::abs(xMax), 1.0);
    auto poleFree = [&](double k2) {
        for (const auto& p : points)
            if (std::abs(k2 + p.x) < poleEps) return false;
        return true;
    };
    auto sseOf = [&](double k1, double k2, double k3) {
        double s = 0.0;
        for (const auto& p : points) {
            const double r = p.y - (k1 / (k2 + p.x) + k3);
            s += r * r;
        }
        return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
    };

    auto runLm = [&](double k1, double k2, double k3) -> LmOutcome {
        constexpr int maxIters = 400;
        double sse = sseOf(k1, k2, k3);
        double lambda = 1e-3;
        bool converged = false;
        int it = 0;
        if (!std::isfinite(sse) || !poleFree(k2))
            return {k1, k2, k3, std::numeric_limits<double>::infinity(), false, 0};
        for (; it < maxIters; ++it) {
            double jtj[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
            double jtr[3] = {0, 0, 0};
            for (const auto& p : points) {
                const double inv = 1.0 / (k2 + p.x);
                const double f = k1 * inv + k3;
                const double res = p.y - f;
                const double j[3] = {inv, -k1 * inv * inv, 1.0};
                for (int r = 0; r < 3; ++r) {
                    jtr[r] += j[r] * res;
                    for (int c = 0; c < 3; ++c) jtj[r][c] += j[r] * j[c];
                }
            }
            double damped[3][3];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) damped[r][c] = jtj[r][c];
            for (int r = 0; r < 3; ++r) damped[r][r] += lambda * std::max(jtj[r][r], 1e-12);

            double delta[3] = {0, 0, 0};
            const bool solved = solve3(damped, jtr, delta);
            double nk1 = 0, nk2 = 0, nk3 = 0, nsse = std::numeric_limits<double>::infinity();
            if (solved) {
                nk1 = k1 + delta[0];
                nk2 = k2 + delta[1];
                nk3 = k3 + delta[2];
                if (poleFree(nk2)) nsse = sseOf(nk1, nk2, nk3);
            }
            if (nsse <= sse) {
                const double drop = sse - nsse;
                const double stepSq =
                    delta[0] * delta[0] + delta[1] * delta[1] + delta[2] * delta[2];
                const double scaleSq = k1 * k1 + k2 * k2 + k3 * k3;
                k1 = nk1;
                k2 = nk2;
                k3 = nk3;
                sse = nsse;
                lambda = std::max(lambda * 0.3, 1e-12);
                if (drop <= 1e-14 * std::max(sse, 1e-30) || stepSq <= 1e-26 * (scaleSq + 1.0)) {
                    converged = true;
                    ++it;
                    break;
                }
            } else {
                lambda *= 10.0;
                if (lambda > 1e14) break;  // stuck; report non-converged
            }
        }
        return {k1, k2, k3, sse, converged, it};
    };

    // deterministic multi-start in k2; k3 from the data floor, k1 from the
    // first sample so the initial curve passes through it
    const std::array<double, 4> k2Starts = {-xMin / 2.0, 0.0, xMean, 10.0 * xMax};
    LmOutcome best{0, 0, 0, std::numeric_limits<double>::infinity(), false, 0};
    bool haveBest = false;
    for (double k20 : k2Starts) {
        if (!poleFree(k20)) continue;
        const double k30 = yMin;
        const double k10 = (points[0].y - k30) * (points[0].x + k20);
        const LmOutcome got = runLm(k10, k20, k30);
        if (!std::isfinite(got.sse)) continue;
        const bool better = !haveBest || got.sse < best.sse ||
                            (got.sse == best.sse && got.converged && !best.converged);
        if (better) {
            best = got;
            haveBest = true;
        }
    }
    if (!haveBest)
        throw SpecError("fit failed: no start produced a finite least-squares objective");

    FitResult out;
    out.k1 = best.k1;
    out.k2 = best.k2;
    out.k3 = best.k3;
    out.sse = best.sse;
    out.converged = best.converged;
    out.iterations = best.iterations;
    return finish(out);
}

double predict(const FitResult& fit, double nConn) {
    const double den = fit.k2 + nConn;
    if (den == 0.0)
        throw SpecError("model pole: k2 + nConn == 0 at nConn=" + std::to_string(nConn));
    return fit.k1 / den + fit.k3;
}

double mape(const FitResult& fit, const std::vector<FitPoint>& points) {
    if (points.empty()) throw SpecError("mape needs at least one point");
    double s = 0.0;
    for (const auto& p : points) {
        if (p.y == 0.0)
            throw SpecError("mape undefined: y == 0 at x=" + std::to_string(p.x));
        s += std::abs(p.y - predict(fit, p.x)) / std::abs(p.y);
    }
    return 100.0 * s / static_cast<double>(points.size());
}

}  // namespace synscale
