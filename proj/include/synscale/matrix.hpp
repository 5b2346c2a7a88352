#pragma once

#include <cstdint>
#include <vector>

#include "synscale/common.hpp"

namespace synscale {

// Distribution for base synaptic weights, before the group sign and gScale
// are applied. Magnitudes only: uniform needs 0 <= lo < hi, constant needs
// a value > 0. A stored weight of exactly zero means "no synapse", so the
// generator redraws anything that rounds to zero.
struct WeightDist {
    enum class Kind { Constant, Uniform };
    Kind kind = Kind::Constant;
    double lo = 0.0;
    double hi = 0.0;
    double value = 0.0;

    static WeightDist uniform(double lo, double hi);
    static WeightDist constant(double value);
};

// Row-major dense connectivity. weights[i*nPost + j] is the synapse from
// pre-neuron i to post-neuron j; zero entries are absent synapses.
struct DenseMatrix {
    std::int32_t nPre = 0;
    std::int32_t nPost = 0;
    std::vector<scalar> weights;

    scalar at(std::int32_t i, std::int32_t j) const {
        return weights[static_cast<std::size_t>(i) * nPost + j];
    }
    std::int64_t nnz() const;
};

// Compressed row storage. gValues and postInd hold the nonzeros in
// pre-major order, postInd strictly increasing within each row; rowStart
// has nPre+1 entries and row i spans [rowStart[i], rowStart[i+1]).
struct CrsMatrix {
    std::int32_t nPre = 0;
    std::int32_t nPost = 0;
    std::vector<scalar> gValues;
    std::vector<std::int32_t> postInd;
    std::vector<std::int64_t> rowStart;

    std::int64_t nnz() const { return static_cast<std::int64_t>(gValues.size()); }
};

bool operator==(const DenseMatrix& a, const DenseMatrix& b);
bool operator==(const CrsMatrix& a, const CrsMatrix& b);

// Throws SpecError when a structural invariant is violated; the message
// names the first offending row/entry.
void check_crs(const CrsMatrix& m);
void check_dense(const DenseMatrix& m);

// Fixed out-degree connectivity: every pre-neuron gets exactly k distinct
// post targets (sampled without replacement), each with a weight drawn from
// dist and multiplied by sign (+1 excitatory, -1 inhibitory). Deterministic
// in (all arguments, seed).
DenseMatrix gen_fixed_outdegree(std::int32_t nPre, std::int32_t nPost, std::int32_t k,
                                const WeightDist& dist, int sign, std::uint64_t seed);

// Lossless storage conversions (to_dense(to_sparse(d)) == d exactly).
CrsMatrix to_sparse(const DenseMatrix& d);
DenseMatrix to_dense(const CrsMatrix& s);

// Storage footprints in element counts. The sparse figure follows the
// 2*nNZ + nPost convention (value + column index per nonzero, plus one
// offset per post-synaptic neuron); the array actually stored for row
// offsets has nPre+1 entries, which this accounting ignores.
std::uint64_t mem_sparse_elements(std::uint64_t nNZ, std::uint64_t nPostSynN);
std::uint64_t mem_dense_elements(std::uint64_t nPreSynN, std::uint64_t nPostSynN);

// Multiplies every weight by gScale (finite, > 0). Structure preserving:
// the zero pattern must not change, so a scale that underflows a weight to
// zero or overflows it to infinity is rejected.
DenseMatrix scale(const DenseMatrix& m, double gScale);
CrsMatrix scale(const CrsMatrix& m, double gScale);

}  // namespace synscale
