#include "synscale/occupancy.hpp"

#include <algorithm>

namespace synscale {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::int64_t round_up(std::int64_t v, std::int64_t unit) { return ceil_div(v, unit) * unit; }

}  // namespace

std::string to_string(Limiter l) {
    switch (l) {
    case Limiter::Warps: return "warps";
    case Limiter::Blocks: return "blocks";
    case Limiter::SharedMem: return "shared";
    case Limiter::Registers: return "registers";
    }
    return "?";
}

void check_device(const DeviceSpec& dev) {
    auto positive = [&](std::int64_t v, const char* what) {
        if (v < 1)
            throw SpecError("device '" + dev.name + "': " + what + " must be >= 1, got " +
                            std::to_string(v));
    };
    positive(dev.warpSize, "warpSize");
    positive(dev.maxWarpsPerSM, "maxWarpsPerSM");
    positive(dev.maxBlocksPerSM, "maxBlocksPerSM");
    positive(dev.maxThreadsPerBlock, "maxThreadsPerBlock");
    positive(dev.sharedMemPerSM, "sharedMemPerSM");
    positive(dev.regsPerSM, "regsPerSM");
    positive(dev.regAllocUnit, "regAllocUnit");
    positive(dev.sharedAllocUnit, "sharedAllocUnit");
}

OccupancyResult occupancy(const DeviceSpec& dev, const KernelSpec& kernel) {
    check_device(dev);
    if (kernel.threadsPerBlock < 1 || kernel.threadsPerBlock > dev.maxThreadsPerBlock)
        throw SpecError("threadsPerBlock must satisfy 1 <= t <= " +
                        std::to_string(dev.maxThreadsPerBlock) + ", got " +
                        std::to_string(kernel.threadsPerBlock));
    if (kernel.regsPerThread < 0)
        throw SpecError("regsPerThread must be >= 0, got " + std::to_string(kernel.regsPerThread));
    if (kernel.sharedMemPerBlock < 0)
        throw SpecError("sharedMemPerBlock must be >= 0, got " +
                        std::to_string(kernel.sharedMemPerBlock));

    OccupancyResult r;
    r.warpsPerBlock = ceil_div(kernel.threadsPerBlock, dev.warpSize);

    r.limitWarps = dev.maxWarpsPerSM / r.warpsPerBlock;
    r.limitBlocks = dev.maxBlocksPerSM;
    r.limitShared = kernel.sharedMemPerBlock == 0
                        ? kUnlimited
                        : dev.sharedMemPerSM / round_up(kernel.sharedMemPerBlock, dev.sharedAllocUnit);
    // registers are allocated per warp, rounded up to the allocation unit
    r.limitRegs = kernel.regsPerThread == 0
                      ? kUnlimited
                      : dev.regsPerSM /
                            (round_up(kernel.regsPerThread * dev.warpSize, dev.regAllocUnit) *
                             r.warpsPerBlock);

    r.activeBlocks = std::min({r.limitWarps, r.limitBlocks, r.limitShared, r.limitRegs});
    r.activeWarps = r.activeBlocks * r.warpsPerBlock;
    r.occupancy = static_cast<double>(r.activeWarps) / static_cast<double>(dev.maxWarpsPerSM);

    if (r.limitWarps == r.activeBlocks) r.limiters.push_back(Limiter::Warps);
    if (r.limitBlocks == r.activeBlocks) r.limiters.push_back(Limiter::Blocks);
    if (r.limitShared == r.activeBlocks) r.limiters.push_back(Limiter::SharedMem);
    if (r.limitRegs == r.activeBlocks) r.limiters.push_back(Limiter::Registers);
    return r;
}

std::pair<std::int64_t, OccupancyResult> recommend_block_size(const DeviceSpec& dev,
                                                              std::int64_t regsPerThread,
                                                              std::int64_t sharedMemPerBlock) {
    check_device(dev);
    // Zero occupancy everywhere is still a reportable answer (the kernel
    // simply does not fit); the scan then returns the largest size.
    std::int64_t bestSize = 0;
    OccupancyResult bestRes;
    for (std::int64_t t = dev.warpSize; t <= dev.maxThreadsPerBlock; t += dev.warpSize) {
        const OccupancyResult r = occupancy(dev, {t, regsPerThread, sharedMemPerBlock});
        // >= : equal occupancy at a larger block size replaces the incumbent
        if (bestSize == 0 || r.activeWarps >= bestRes.activeWarps) {
            bestSize = t;
            bestRes = r;
        }
    }
    if (bestSize == 0)
        throw SpecError("device '" + dev.name +
                        "' allows no warp-multiple block size (maxThreadsPerBlock " +
                        std::to_string(dev.maxThreadsPerBlock) + " < warpSize " +
                        std::to_string(dev.warpSize) + ")");
    return {bestSize, bestRes};
}

DeviceSpec device_preset(const std::string& name) {
    // per-SM budgets and allocation granularities by compute generation
    if (name == "cc20")
        return {"cc20", 32, 48, 8, 1024, 49152, 32768, 64, 128};
    if (name == "cc30")
        return {"cc30", 32, 64, 16, 1024, 49152, 65536, 256, 256};
    if (name == "cc50")
        return {"cc50", 32, 64, 32, 1024, 65536, 65536, 256, 256};
    std::string known;
    for (const auto& n : device_preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw SpecError("unknown device preset '" + name + "' (known: " + known + ")");
}

std::vector<std::string> device_preset_names() { return {"cc20", "cc30", "cc50"}; }

}  // namespace synscale
