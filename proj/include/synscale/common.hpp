#pragma once

#include <stdexcept>
#include <string>

namespace synscale {

// Simulation state and synaptic weights are stored in this type. Single
// precision is the default target; flip SYNSCALE_REAL_DOUBLE to rebuild
// everything in double.
#ifdef SYNSCALE_REAL_DOUBLE
using scalar = double;
#else
using scalar = float;
#endif

// Contract violations caused by user input: bad network specs, bad config
// files, out-of-range arguments. The CLI maps these to exit code 2; any
// other exception is treated as an internal error (exit code 1).
class SpecError : public std::runtime_error {
public:
    explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace synscale
