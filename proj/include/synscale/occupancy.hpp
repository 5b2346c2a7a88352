#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "synscale/common.hpp"

namespace synscale {

// Per-multiprocessor resource budget of a device, plus allocation
// granularities. All counts are per streaming multiprocessor.
struct DeviceSpec {
    std::string name;
    std::int64_t warpSize = 32;
    std::int64_t maxWarpsPerSM = 64;
    std::int64_t maxBlocksPerSM = 16;
    std::int64_t maxThreadsPerBlock = 1024;
    std::int64_t sharedMemPerSM = 49152;   // bytes
    std::int64_t regsPerSM = 65536;        // 32-bit registers
    std::int64_t regAllocUnit = 256;       // registers round up per warp to this
    std::int64_t sharedAllocUnit = 256;    // shared memory rounds up per block to this
};

struct KernelSpec {
    std::int64_t threadsPerBlock = 0;
    std::int64_t regsPerThread = 0;      // 0 = not register limited
    std::int64_t sharedMemPerBlock = 0;  // bytes; 0 = not shared-memory limited
};

enum class Limiter { Warps, Blocks, SharedMem, Registers };

std::string to_string(Limiter l);

// How many blocks of this kernel fit on one SM under each resource, and
// which resources bind. A limit of kUnlimited means the kernel does not
// consume that resource.
struct OccupancyResult {
    std::int64_t warpsPerBlock = 0;
    std::int64_t limitWarps = 0;
    std::int64_t limitBlocks = 0;
    std::int64_t limitShared = 0;
    std::int64_t limitRegs = 0;
    std::int64_t activeBlocks = 0;
    std::int64_t activeWarps = 0;
    double occupancy = 0.0;            // activeWarps / maxWarpsPerSM
    std::vector<Limiter> limiters;     // every resource whose limit == activeBlocks
};

inline constexpr std::int64_t kUnlimited = INT64_MAX;

void check_device(const DeviceSpec& dev);

OccupancyResult occupancy(const DeviceSpec& dev, const KernelSpec& kernel);

// Scans every launchable block size (multiples of the warp size up to
// maxThreadsPerBlock) and returns the one with the highest occupancy;
// ties resolve to the largest block size. A kernel that fits nowhere gets
// the largest block size with occupancy 0 - still a reportable answer.
// Throws SpecError only when no warp-multiple block size exists at all
// (maxThreadsPerBlock < warpSize).
std::pair<std::int64_t, OccupancyResult> recommend_block_size(const DeviceSpec& dev,
                                                              std::int64_t regsPerThread,
                                                              std::int64_t sharedMemPerBlock);

// Named device presets; throws SpecError for unknown names, listing the
// known ones.
DeviceSpec device_preset(const std::string& name);
std::vector<std::string> device_preset_names();

}  // namespace synscale
