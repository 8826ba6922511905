#include "depofrag/csv.hpp"

#include "depofrag/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace depofrag {

namespace {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw io_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::ostringstream ss;
    ss << header << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) ss << ',';
            ss << format_number(row[i]);
        }
        ss << '\n';
    }
    write_text_atomic(path, ss.str());
}

void write_moments_csv(const std::filesystem::path& path, const MomentSeries& series) {
    std::vector<std::vector<double>> rows;
    rows.reserve(series.times.size());
    for (std::size_t i = 0; i < series.times.size(); ++i)
        rows.push_back({series.times[i], series.values[i]});
    write_csv(path, "t,M" + std::to_string(series.k), rows);
}

MomentSeries read_moments_csv(const std::filesystem::path& path, double delta) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open moment file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw io_error("empty moment file: " + path.string());
    MomentSeries ms;
    ms.delta = delta;
    if (line.rfind("t,M", 0) != 0)
        throw std::invalid_argument("moment CSV must start with a 't,Mk' header");
    ms.k = std::stoi(line.substr(3));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("malformed moment CSV row: " + line);
        ms.times.push_back(std::stod(line.substr(0, comma)));
        ms.values.push_back(std::stod(line.substr(comma + 1)));
    }
    ms.validate();
    return ms;
}

void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples) {
    samples.validate();
    std::ostringstream ss;
    ss << "time,size\n";
    for (std::size_t i = 0; i < samples.n_times(); ++i)
        for (double x : samples.sizes[i])
            ss << format_number(samples.times[i]) << ',' << format_number(x) << '\n';
    write_text_atomic(path, ss.str());
}

SampleSet read_samples_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open sample file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw io_error("empty sample file: " + path.string());
    if (line != "time,size")
        throw std::invalid_argument("sample CSV must start with a 'time,size' header");
    std::map<double, std::vector<double>> groups;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("malformed sample CSV row: " + line);
        const double t = std::stod(line.substr(0, comma));
        groups[t].push_back(std::stod(line.substr(comma + 1)));
    }
    SampleSet set;
    for (auto& [t, xs] : groups) {
        set.times.push_back(t);
        set.sizes.push_back(std::move(xs));
    }
    set.validate();
    return set;
}

}  // namespace depofrag
