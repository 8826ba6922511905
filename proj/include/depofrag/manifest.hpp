#pragma once

#include "depofrag/config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace depofrag {

/// FNV-1a 64-bit checksum of a file's bytes, as a hex string.
std::string file_checksum(const std::filesystem::path& path);

/// Reproducibility record written next to every command's outputs: config
/// snapshot, tool version, seed, wall time and output checksums. Re-running
/// with the same manifest reproduces byte-identical CSV outputs.
struct RunManifest {
    std::string command;
    ExperimentConfig config;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0;
    std::vector<std::filesystem::path> outputs;

    void write(const std::filesystem::path& path) const;
};

}  // namespace depofrag
