#include <doctest.h>

#include <synscale/calibration.hpp>
#include <synscale/random.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

using namespace synscale;

namespace {

const double kNan = std::numeric_limits<double>::quiet_NaN();

TemplateBuilder small_net_builder() {
    return [](std::int32_t nConn, double gScale) {
        IzhBuildOptions opt;
        opt.durationMs = 100.0;
        opt.biasCurrent = 10.0;
        return build_izhikevich_net(40, nConn, 0.8, gScale, 5, opt);
    };
}

SweepRow row(std::int32_t nConn, double gScale, double avgSpike, std::int64_t sumNaNs = 0) {
    SweepRow r;
    r.nConn = nConn;
    r.gScale = gScale;
    r.avgSpike = avgSpike;
    r.sumNaNs = sumNaNs;
    return r;
}

SweepRow failed_row(std::int32_t nConn, double gScale, const std::string& error) {
    SweepRow r;
    r.nConn = nConn;
    r.gScale = gScale;
    r.avgSpike = kNan;
    r.sumNaNs = -1;
    r.failed = true;
    r.error = error;
    return r;
}

double hyperbola(double k1, double k2, double k3, double x) { return k1 / (k2 + x) + k3; }

std::vector<FitPoint> sample_hyperbola(double k1, double k2, double k3,
                                       const std::vector<double>& xs) {
    std::vector<FitPoint> pts;
    for (double x : xs) pts.push_back({x, hyperbola(k1, k2, k3, x)});
    return pts;
}

std::vector<double> linspace_int(double lo, double hi, double step) {
    std::vector<double> xs;
    for (double x = lo; x <= hi + 1e-9; x += step) xs.push_back(x);
    return xs;
}

double sse_of(const std::vector<FitPoint>& pts, double k1, double k2, double k3) {
    double s = 0.0;
    for (const auto& p : pts) {
        const double r = p.y - hyperbola(k1, k2, k3, p.x);
        s += r * r;
    }
    return s;
}

} // namespace

TEST_CASE("sweep covers the grid in sorted order and collapses duplicates") {
    SweepRequest req;
    req.nConnValues = {10, 5, 5};
    req.gScaleValues = {1.0, 0.5, 1.0};
    req.targetPopulation = "neurons";

    const auto rows = sweep(small_net_builder(), req);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].nConn == 5);
    CHECK(rows[0].gScale == 0.5);
    CHECK(rows[1].nConn == 5);
    CHECK(rows[1].gScale == 1.0);
    CHECK(rows[2].nConn == 10);
    CHECK(rows[2].gScale == 0.5);
    CHECK(rows[3].nConn == 10);
    CHECK(rows[3].gScale == 1.0);
    for (const auto& r : rows) {
        CHECK(!r.failed);
        CHECK(std::isfinite(r.avgSpike));
        CHECK(r.sumNaNs == 0);
    }
}

TEST_CASE("a sweep cell reports exactly what a direct run reports") {
    SweepRequest req;
    req.nConnValues = {8};
    req.gScaleValues = {0.7};
    req.targetPopulation = "neurons";

    const auto rows = sweep(small_net_builder(), req);
    REQUIRE(rows.size() == 1);

    const RunResult direct = run(small_net_builder()(8, 0.7));
    CHECK(rows[0].avgSpike == direct.avgSpike.at("neurons"));
    CHECK(rows[0].sumNaNs == direct.sumNaNs);
}

TEST_CASE("a failing cell is recorded, not fatal") {
    TemplateBuilder flaky = [](std::int32_t nConn, double gScale) {
        if (nConn == 10) throw SpecError("synthetic failure for this cell");
        return small_net_builder()(nConn, gScale);
    };
    SweepRequest req;
    req.nConnValues = {5, 10};
    req.gScaleValues = {0.5, 1.0};
    req.targetPopulation = "neurons";

    const auto rows = sweep(flaky, req);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        if (r.nConn == 10) {
            CHECK(r.failed);
            CHECK(r.error.find("synthetic failure") != std::string::npos);
            CHECK(std::isnan(r.avgSpike));
            CHECK(r.sumNaNs == -1);
        } else {
            CHECK(!r.failed);
            CHECK(std::isfinite(r.avgSpike));
        }
    }
}

TEST_CASE("worker count does not change the results") {
    SweepRequest req;
    req.nConnValues = {4, 8, 12};
    req.gScaleValues = {0.5, 1.0};
    req.targetPopulation = "neurons";

    req.parallelism = 1;
    const auto serial = sweep(small_net_builder(), req);
    req.parallelism = 3;
    const auto parallel = sweep(small_net_builder(), req);

    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].nConn == parallel[i].nConn);
        CHECK(serial[i].gScale == parallel[i].gScale);
        CHECK(serial[i].avgSpike == parallel[i].avgSpike); // exact, not approximate
        CHECK(serial[i].sumNaNs == parallel[i].sumNaNs);
        CHECK(serial[i].failed == parallel[i].failed);
    }
}

TEST_CASE("the progress hook sees every cell exactly once") {
    SweepRequest req;
    req.nConnValues = {4, 8};
    req.gScaleValues = {0.5, 1.0, 2.0};
    req.targetPopulation = "neurons";
    req.parallelism = 2;

    std::vector<std::size_t> doneValues;
    std::size_t totalSeen = 0;
    req.onCell = [&](const SweepRow&, std::size_t done, std::size_t total) {
        doneValues.push_back(done);
        totalSeen = total;
    };
    const auto rows = sweep(small_net_builder(), req);
    CHECK(rows.size() == 6);
    CHECK(totalSeen == 6);
    std::sort(doneValues.begin(), doneValues.end());
    REQUIRE(doneValues.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(doneValues[i] == i + 1);
}

TEST_CASE("sweep rejects unusable requests") {
    SweepRequest req;
    req.targetPopulation = "neurons";
    CHECK_THROWS_AS(sweep(small_net_builder(), req), SpecError); // no nConn values

    req.nConnValues = {5};
    CHECK_THROWS_AS(sweep(small_net_builder(), req), SpecError); // no gScale values

    req.gScaleValues = {std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(sweep(small_net_builder(), req), SpecError); // non-finite gScale

    req.gScaleValues = {1.0};
    req.targetPopulation = "";
    CHECK_THROWS_AS(sweep(small_net_builder(), req), SpecError); // no target

    req.targetPopulation = "neurons";
    CHECK_THROWS_AS(sweep(nullptr, req), SpecError); // no builder
}

TEST_CASE("select_optima picks the closest rate per nConn") {
    std::vector<SweepRow> rows = {
        row(1000, 1.0, 10.0), // reference cell
        row(100, 1.0, 12.0),  row(100, 2.0, 9.8), row(100, 3.0, 15.0),
    };
    const auto sel = select_optima(rows, 1000, 1.0);
    CHECK(sel.referenceAvgSpike == 10.0);
    REQUIRE(sel.optima.size() == 2);
    CHECK(sel.optima[0].nConn == 100);
    CHECK(sel.optima[0].gScale == 2.0);
    CHECK(sel.optima[0].avgSpike == 9.8);
    CHECK(sel.optima[1].nConn == 1000);
    CHECK(sel.optima[1].gScale == 1.0);
    CHECK(sel.excluded.empty());
    CHECK(sel.omittedNConn.empty());
}

TEST_CASE("rate ties resolve to the smaller gScale, in any input order") {
    std::vector<SweepRow> rows = {
        row(1000, 1.0, 10.0),
        row(200, 2.0, 11.0), // distance 1.0
        row(200, 1.0, 9.0),  // distance 1.0 as well but smaller gScale
    };
    auto sel = select_optima(rows, 1000, 1.0);
    REQUIRE(sel.optima.size() == 2);
    CHECK(sel.optima[0].gScale == 1.0);

    std::swap(rows[1], rows[2]);
    sel = select_optima(rows, 1000, 1.0);
    CHECK(sel.optima[0].gScale == 1.0);
}

TEST_CASE("contaminated and failed rows never win") {
    std::vector<SweepRow> rows = {
        row(1000, 1.0, 10.0),
        row(300, 1.0, 10.0, 5), // perfect rate but NaN-contaminated
        row(300, 2.0, 8.0),
        failed_row(300, 3.0, "boom"),
        row(350, 1.5, kNan), // non-finite rate without the NaN counter
    };
    const auto sel = select_optima(rows, 1000, 1.0);
    REQUIRE(sel.optima.size() == 2);
    CHECK(sel.optima[0].nConn == 300);
    CHECK(sel.optima[0].gScale == 2.0);
    REQUIRE(sel.excluded.size() == 3);
    // every nConn=350 row was unusable
    REQUIRE(sel.omittedNConn.size() == 1);
    CHECK(sel.omittedNConn[0] == 350);
}

TEST_CASE("select_optima is order independent") {
    std::vector<SweepRow> rows = {
        row(1000, 1.0, 10.0), row(100, 1.0, 12.0), row(100, 2.0, 9.8),
        row(200, 0.5, 10.4),  row(200, 1.5, 9.7),  row(300, 1.0, 10.0, 2),
        row(300, 2.0, 13.0),
    };
    const auto reference = select_optima(rows, 1000, 1.0);

    std::mt19937_64 shuffler(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(rows.begin(), rows.end(), shuffler);
        const auto sel = select_optima(rows, 1000, 1.0);
        REQUIRE(sel.optima.size() == reference.optima.size());
        for (std::size_t i = 0; i < sel.optima.size(); ++i) {
            CHECK(sel.optima[i].nConn == reference.optima[i].nConn);
            CHECK(sel.optima[i].gScale == reference.optima[i].gScale);
        }
    }
}

TEST_CASE("select_optima insists on a usable reference cell") {
    std::vector<SweepRow> rows = {row(100, 1.0, 12.0)};
    CHECK_THROWS_WITH_AS(select_optima(rows, 999, 1.0), doctest::Contains("nConn=999"),
                         SpecError);

    rows.push_back(row(999, 1.0, 10.0, 7));
    CHECK_THROWS_WITH_AS(select_optima(rows, 999, 1.0), doctest::Contains("NaN"), SpecError);

    rows.back() = failed_row(999, 1.0, "synthetic reference failure");
    CHECK_THROWS_WITH_AS(select_optima(rows, 999, 1.0),
                         doctest::Contains("synthetic reference failure"), SpecError);

    rows.back() = row(999, 1.0, std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(select_optima(rows, 999, 1.0), SpecError);
}

TEST_CASE("fit recovers known constants from noise-free samples") {
    struct Case {
        const char* label;
        double k1, k2, k3;
        std::vector<double> xs;
    };
    // realistic constant sets: large positive offset pole, small-magnitude
    // curve, and a negative k2 with a pole below the sampled range
    const std::vector<Case> cases = {
        {"recurrent", 1.318e3, 1.099e2, -2.800e-1, linspace_int(100, 1000, 50)},
        {"feedforward-small", 1.118e-1, 9.810, 4.972e-5, linspace_int(20, 200, 20)},
        {"negative-k2", 1.354e3, -6.338, 1.672e-3, linspace_int(20, 200, 20)},
    };
    for (const auto& c : cases) {
        CAPTURE(c.label);
        const auto pts = sample_hyperbola(c.k1, c.k2, c.k3, c.xs);
        const FitResult fit = fit_gscale(pts);
        CHECK(fit.converged);
        CHECK(std::abs(fit.k1 - c.k1) <= 1e-6 * std::abs(c.k1));
        CHECK(std::abs(fit.k2 - c.k2) <= 1e-6 * std::abs(c.k2));
        CHECK(std::abs(fit.k3 - c.k3) <= 1e-6 * std::max(std::abs(c.k3), 1e-6));
        CHECK(fit.sse <= 1e-9);
        CHECK(mape(fit, pts) <= 1e-4);
    }
}

TEST_CASE("fit reproduces a textbook hyperbola exactly") {
    // y = 1 / (1 + x) at x = 0, 1, 3, 7
    const std::vector<FitPoint> pts = {{0.0, 1.0}, {1.0, 0.5}, {3.0, 0.25}, {7.0, 0.125}};
    const FitResult fit = fit_gscale(pts);
    CHECK(fit.converged);
    CHECK(fit.k1 == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(fit.k2 == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(fit.k3) < 1e-8);
    CHECK(fit.sse < 1e-16);
}

TEST_CASE("flat data short-circuits to the degenerate exact solution") {
    const std::vector<FitPoint> pts = {{1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}, {10.0, 5.0}};
    const FitResult fit = fit_gscale(pts);
    CHECK(fit.k1 == 0.0);
    CHECK(fit.k2 == 1.0);
    CHECK(fit.k3 == 5.0);
    CHECK(fit.sse == 0.0);
    CHECK(fit.converged);
    CHECK(fit.iterations == 0);
    CHECK(fit.mapePercent == 0.0);
}

TEST_CASE("fit input validation") {
    std::vector<FitPoint> three = {{1, 1}, {2, 2}, {3, 3}};
    CHECK_THROWS_WITH_AS(fit_gscale(three), doctest::Contains("4 points"), SpecError);

    std::vector<FitPoint> dup = {{1, 1}, {2, 2}, {2, 3}, {4, 4}};
    CHECK_THROWS_WITH_AS(fit_gscale(dup), doctest::Contains("distinct"), SpecError);

    std::vector<FitPoint> nan = {{1, 1}, {2, kNan}, {3, 3}, {4, 4}};
    CHECK_THROWS_AS(fit_gscale(nan), SpecError);
}

TEST_CASE("the fitted parameters are a local minimum of the objective") {
    const auto pts = sample_hyperbola(1.318e3, 1.099e2, -2.800e-1,
                                      linspace_int(100, 1000, 50));
    // perturb the samples so the minimum is not exactly zero residual
    auto bent = pts;
    for (std::size_t i = 0; i < bent.size(); ++i)
        bent[i].y *= 1.0 + (i % 2 == 0 ? 0.01 : -0.01);

    const FitResult fit = fit_gscale(bent);
    const double atFit = sse_of(bent, fit.k1, fit.k2, fit.k3);
    CHECK(atFit == doctest::Approx(fit.sse).epsilon(1e-9));
    for (const double f1 : {0.99, 1.01})
        for (const double f2 : {0.99, 1.01})
            for (const double f3 : {0.99, 1.01}) {
                const double perturbed =
                    sse_of(bent, fit.k1 * f1, fit.k2 * f2, fit.k3 * f3);
                CHECK(perturbed >= atFit * (1.0 - 1e-9));
            }
}

TEST_CASE("predict evaluates the model and guards the pole") {
    FitResult fit;
    fit.k1 = 1.318e3;
    fit.k2 = 1.099e2;
    fit.k3 = -2.800e-1;
    CHECK(predict(fit, 100.0) == doctest::Approx(1.318e3 / 209.9 - 0.28).epsilon(1e-12));
    CHECK(predict(fit, 1000.0) ==
          doctest::Approx(1.318e3 / 1109.9 - 0.28).epsilon(1e-12));

    FitResult smallFit;
    smallFit.k1 = 1.118e-1;
    smallFit.k2 = 9.810;
    smallFit.k3 = 4.972e-5;
    CHECK(predict(smallFit, 100.0) == doctest::Approx(1.068e-3).epsilon(1e-3));

    FitResult constant;
    constant.k1 = 0.0;
    constant.k2 = 3.0;
    constant.k3 = 7.5;
    CHECK(predict(constant, 123.0) == 7.5);

    FitResult pole;
    pole.k2 = -50.0;
    CHECK_THROWS_AS(predict(pole, 50.0), SpecError);
}

TEST_CASE("the reparametrised identity holds for the fitted curve") {
    // (g - k3) * (x + k2) = k1 is the same model written as a shifted
    // reciprocal; evaluating one form must satisfy the other
    FitResult fit;
    fit.k1 = 42.5;
    fit.k2 = -11.0;
    fit.k3 = 0.75;
    for (double x : {20.0, 57.0, 123.0, 999.0}) {
        const double g = predict(fit, x);
        CHECK((g - fit.k3) * (x + fit.k2) == doctest::Approx(fit.k1).epsilon(1e-12));
    }
}

TEST_CASE("mape hand values") {
    FitResult exact;
    exact.k1 = 100.0;
    exact.k2 = 10.0;
    exact.k3 = 1.0;
    const auto pts = sample_hyperbola(100.0, 10.0, 1.0, {20, 40, 80, 160});
    CHECK(mape(exact, pts) < 1e-12);

    FitResult constant;
    constant.k1 = 0.0;
    constant.k2 = 1.0;
    constant.k3 = 9.0;
    const std::vector<FitPoint> one = {{1.0, 10.0}};
    CHECK(mape(constant, one) == doctest::Approx(10.0).epsilon(1e-12));

    CHECK_THROWS_AS(mape(constant, {}), SpecError);
    const std::vector<FitPoint> zeroY = {{5.0, 0.0}};
    CHECK_THROWS_WITH_AS(mape(constant, zeroY), doctest::Contains("x=5"), SpecError);
}

TEST_CASE("end to end: sweep, select, fit on a synthetic rate model") {
    // A builder-free sanity path: fabricate sweep rows whose rate grows
    // with nConn * gScale, so the closest-rate optimum per nConn follows a
    // reciprocal in nConn, then check the fit reproduces that shape.
    std::vector<SweepRow> rows;
    const std::vector<std::int32_t> ns = {50, 100, 200, 400, 800};
    const std::vector<double> gs = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    for (std::int32_t n : ns)
        for (double g : gs) rows.push_back(row(n, g, static_cast<double>(n) * g / 80.0));

    const auto sel = select_optima(rows, 800, 0.25); // reference rate 2.5
    REQUIRE(sel.optima.size() == ns.size());
    std::vector<FitPoint> pts;
    for (const auto& o : sel.optima) {
        pts.push_back({static_cast<double>(o.nConn), o.gScale});
        // each optimum's rate must be the closest achievable to 2.5
        for (const auto& r : rows)
            if (r.nConn == o.nConn)
                CHECK(std::abs(o.avgSpike - 2.5) <= std::abs(r.avgSpike - 2.5));
    }
    // optima must decrease with nConn (denser wiring needs weaker synapses)
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].y <= pts[i - 1].y);

    const FitResult fit = fit_gscale(pts);
    CHECK(fit.converged);
    CHECK(fit.k1 > 0.0);
    // the fabricated optima lie exactly on g = 200 / n
    CHECK(mape(fit, pts) < 1e-4);
}
