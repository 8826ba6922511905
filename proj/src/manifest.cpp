#include "depofrag/manifest.hpp"

#include "depofrag/csv.hpp"
#include "depofrag/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace depofrag {

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("checksum: cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

void RunManifest::write(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["tool_version"] = DEPOFRAG_VERSION;
    j["command"] = command;
    j["seed"] = seed;
    j["wall_time_s"] = wall_time_s;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config.entries()) cfg[k] = v;
    j["config"] = cfg;
    j["outputs"] = nlohmann::json::array();
    for (const auto& out : outputs)
        j["outputs"].push_back({{"path", out.string()}, {"fnv1a64", file_checksum(out)}});
    write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace depofrag
