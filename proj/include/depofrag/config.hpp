#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace depofrag {

/// Flat dotted-key configuration with a closed key registry: every parameter
/// has a default, unknown keys are rejected, and serialization round-trips
/// unchanged (keys sorted, values as written).
class ExperimentConfig {
public:
    /// Registry defaults.
    ExperimentConfig();

    /// Defaults overlaid with `key = value` lines ('#' comments allowed).
    static ExperimentConfig load(const std::filesystem::path& path);
    static ExperimentConfig parse(const std::string& text);

    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_uint64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    const std::string& get_string(const std::string& key) const;

    void set(const std::string& key, const std::string& value);  ///< rejects unknown keys

    std::string serialize() const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace depofrag
