#pragma once

#include "depofrag/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace depofrag::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_io = 2;
inline constexpr int exit_validation = 3;
inline constexpr int exit_numerical = 4;

struct GlobalArgs {
    std::optional<std::filesystem::path> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
};

ExperimentConfig effective_config(const GlobalArgs& args);

int cmd_gen_synthetic(const GlobalArgs& args);
int cmd_simulate_depoly(const GlobalArgs& args);
int cmd_invert_depoly(const GlobalArgs& args, const std::filesystem::path& moments_file);
int cmd_simulate_frag(const GlobalArgs& args);
int cmd_estimate_frag(const GlobalArgs& args, const std::filesystem::path& samples_file);
int cmd_validate_frag(const GlobalArgs& args, const std::filesystem::path& samples_file);

}  // namespace depofrag::cli
