#pragma once

#include "depofrag/depoly.hpp"
#include "depofrag/sampling.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace depofrag {

/// Write rows atomically (temp file + rename), numbers as %.17g so re-runs
/// are byte-identical.
void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<std::vector<double>>& rows);

void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// Moment CSV: header "t,M<k>", one row per sample. delta is not stored in
/// the file; the caller supplies it.
void write_moments_csv(const std::filesystem::path& path, const MomentSeries& series);
MomentSeries read_moments_csv(const std::filesystem::path& path, double delta = 0.0);

/// SampleSet CSV: header "time,size", one row per particle; the loader
/// groups rows by time.
void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples);
SampleSet read_samples_csv(const std::filesystem::path& path);

}  // namespace depofrag
