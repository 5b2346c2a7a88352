#include "synscale/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "synscale/random.hpp"

namespace synscale {

WeightDist WeightDist::uniform(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo < 0.0 || !(lo < hi))
        throw SpecError("uniform weight range needs finite bounds with 0 <= lo < hi, got [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + ")");
    WeightDist d;
    d.kind = Kind::Uniform;
    d.lo = lo;
    d.hi = hi;
    return d;
}

WeightDist WeightDist::constant(double value) {
    if (!std::isfinite(value) || !(value > 0.0))
        throw SpecError("constant weight must be finite and > 0, got " + std::to_string(value));
    WeightDist d;
    d.kind = Kind::Constant;
    d.value = value;
    return d;
}

std::int64_t DenseMatrix::nnz() const {
    std::int64_t n = 0;
    for (scalar w : weights)
        if (w != scalar(0)) ++n;
    return n;
}

bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.nPre == b.nPre && a.nPost == b.nPost && a.weights == b.weights;
}

bool operator==(const CrsMatrix& a, const CrsMatrix& b) {
    return a.nPre == b.nPre && a.nPost == b.nPost && a.gValues == b.gValues &&
           a.postInd == b.postInd && a.rowStart == b.rowStart;
}

void check_dense(const DenseMatrix& m) {
    if (m.nPre < 1 || m.nPost < 1)
        throw SpecError("dense matrix dimensions must be >= 1, got " + std::to_string(m.nPre) +
                        " x " + std::to_string(m.nPost));
    if (m.weights.size() != static_cast<std::size_t>(m.nPre) * static_cast<std::size_t>(m.nPost))
        throw SpecError("dense matrix weight array has " + std::to_string(m.weights.size()) +
                        " entries, expected nPre*nPost = " +
                        std::to_string(static_cast<std::int64_t>(m.nPre) * m.nPost));
    for (std::size_t i = 0; i < m.weights.size(); ++i)
        if (!std::isfinite(m.weights[i]))
            throw SpecError("dense matrix entry " + std::to_string(i) + " is not finite");
}

void check_crs(const CrsMatrix& m) {
    if (m.nPre < 1 || m.nPost < 1)
        throw SpecError("sparse matrix dimensions must be >= 1, got " + std::to_string(m.nPre) +
                        " x " + std::to_string(m.nPost));
    if (m.rowStart.size() != static_cast<std::size_t>(m.nPre) + 1)
        throw SpecError("rowStart must have nPre+1 entries, got " + std::to_string(m.rowStart.size()));
    if (m.rowStart.front() != 0)
        throw SpecError("rowStart[0] must be 0, got " + std::to_string(m.rowStart.front()));
    if (m.rowStart.back() != static_cast<std::int64_t>(m.gValues.size()))
        throw SpecError("rowStart[nPre] must equal the nonzero count " +
                        std::to_string(m.gValues.size()) + ", got " + std::to_string(m.rowStart.back()));
    if (m.postInd.size() != m.gValues.size())
        throw SpecError("postInd and gValues lengths differ: " + std::to_string(m.postInd.size()) +
                        " vs " + std::to_string(m.gValues.size()));
    for (std::int32_t i = 0; i < m.nPre; ++i) {
        if (m.rowStart[i] > m.rowStart[i + 1])
            throw SpecError("rowStart must be non-decreasing, violated at row " + std::to_string(i));
        for (std::int64_t k = m.rowStart[i]; k < m.rowStart[i + 1]; ++k) {
            if (m.postInd[k] < 0 || m.postInd[k] >= m.nPost)
                throw SpecError("postInd out of range in row " + std::to_string(i) + ": " +
                                std::to_string(m.postInd[k]));
            if (k > m.rowStart[i] && m.postInd[k] <= m.postInd[k - 1])
                throw SpecError("postInd must be strictly increasing within row " + std::to_string(i));
            if (!std::isfinite(m.gValues[k]) || m.gValues[k] == scalar(0))
                throw SpecError("gValues entries must be finite and nonzero, violated in row " +
                                std::to_string(i));
        }
    }
}

DenseMatrix gen_fixed_outdegree(std::int32_t nPre, std::int32_t nPost, std::int32_t k,
                                const WeightDist& dist, int sign, std::uint64_t seed) {
    if (nPre < 1 || nPost < 1)
        throw SpecError("matrix dimensions must be >= 1, got " + std::to_string(nPre) + " x " +
                        std::to_string(nPost));
    if (k < 1 || k > nPost)
        throw SpecError("out-degree must satisfy 1 <= k <= nPost, got k=" + std::to_string(k) +
                        " with nPost=" + std::to_string(nPost));
    if (sign != 1 && sign != -1)
        throw SpecError("sign must be +1 or -1, got " + std::to_string(sign));
    if (dist.kind == WeightDist::Kind::Uniform) {
        // re-validate; a hand-filled struct could bypass the factory
        (void)WeightDist::uniform(dist.lo, dist.hi);
    } else {
        (void)WeightDist::constant(dist.value);
    }

    RandomStream targets(seed, 0, "gen/targets");
    RandomStream weights(seed, 0, "gen/weights");

    DenseMatrix m;
    m.nPre = nPre;
    m.nPost = nPost;
    m.weights.assign(static_cast<std::size_t>(nPre) * nPost, scalar(0));

    std::vector<std::int32_t> pool(nPost);
    std::vector<std::int32_t> chosen(k);
    for (std::int32_t i = 0; i < nPre; ++i) {
        // partial Fisher-Yates: k distinct targets without replacement
        std::iota(pool.begin(), pool.end(), 0);
        for (std::int32_t j = 0; j < k; ++j) {
            std::uint32_t r = targets.below(static_cast<std::uint32_t>(nPost - j));
            std::swap(pool[j], pool[j + r]);
            chosen[j] = pool[j];
        }
        std::sort(chosen.begin(), chosen.end());
        scalar* row = m.weights.data() + static_cast<std::size_t>(i) * nPost;
        for (std::int32_t j = 0; j < k; ++j) {
            scalar w;
            do {
                double raw = dist.kind == WeightDist::Kind::Uniform
                                 ? weights.uniform(dist.lo, dist.hi)
                                 : dist.value;
                w = static_cast<scalar>(raw * sign);
                if (dist.kind == WeightDist::Kind::Constant && w == scalar(0))
                    throw SpecError("constant weight underflows to zero in storage precision");
            } while (w == scalar(0));
            row[chosen[j]] = w;
        }
    }
    return m;
}

CrsMatrix to_sparse(const DenseMatrix& d) {
    check_dense(d);
    CrsMatrix s;
    s.nPre = d.nPre;
    s.nPost = d.nPost;
    s.rowStart.resize(static_cast<std::size_t>(d.nPre) + 1);
    s.rowStart[0] = 0;
    for (std::int32_t i = 0; i < d.nPre; ++i) {
        const scalar* row = d.weights.data() + static_cast<std::size_t>(i) * d.nPost;
        for (std::int32_t j = 0; j < d.nPost; ++j) {
            if (row[j] != scalar(0)) {
                s.gValues.push_back(row[j]);
                s.postInd.push_back(j);
            }
        }
        s.rowStart[i + 1] = static_cast<std::int64_t>(s.gValues.size());
    }
    return s;
}

DenseMatrix to_dense(const CrsMatrix& s) {
    check_crs(s);
    DenseMatrix d;
    d.nPre = s.nPre;
    d.nPost = s.nPost;
    d.weights.assign(static_cast<std::size_t>(s.nPre) * s.nPost, scalar(0));
    for (std::int32_t i = 0; i < s.nPre; ++i)
        for (std::int64_t k = s.rowStart[i]; k < s.rowStart[i + 1]; ++k)
            d.weights[static_cast<std::size_t>(i) * s.nPost + s.postInd[k]] = s.gValues[k];
    return d;
}

std::uint64_t mem_sparse_elements(std::uint64_t nNZ, std::uint64_t nPostSynN) {
    return 2 * nNZ + nPostSynN;
}

std::uint64_t mem_dense_elements(std::uint64_t nPreSynN, std::uint64_t nPostSynN) {
    return nPreSynN * nPostSynN;
}

namespace {

scalar scale_one(scalar w, double gScale) {
    const scalar s = static_cast<scalar>(static_cast<double>(w) * gScale);
    if (!std::isfinite(s))
        throw SpecError("scaling overflows a weight to non-finite");
    if (s == scalar(0))
        throw SpecError("scaling underflows a weight to zero, which would change the sparsity pattern");
    return s;
}

void require_scale(double gScale) {
    if (!std::isfinite(gScale) || !(gScale > 0.0))
        throw SpecError("gScale must be finite and > 0, got " + std::to_string(gScale));
}

}  // namespace

DenseMatrix scale(const DenseMatrix& m, double gScale) {
    require_scale(gScale);
    check_dense(m);
    DenseMatrix out = m;
    for (scalar& w : out.weights)
        if (w != scalar(0)) w = scale_one(w, gScale);
    return out;
}

CrsMatrix scale(const CrsMatrix& m, double gScale) {
    require_scale(gScale);
    check_crs(m);
    CrsMatrix out = m;
    for (scalar& w : out.gValues) w = scale_one(w, gScale);
    return out;
}

}  // namespace synscale
