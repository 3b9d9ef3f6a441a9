#pragma once

#include "projlearn/types.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace projlearn {

/// Writes through a sibling temp file and renames it into place, so readers
/// never observe a half-written file.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Comma separated, shortest round-trip decimal representation.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
void write_labels_csv(const std::filesystem::path& path, const std::vector<int>& labels);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// Thread cap from PROJLEARN_THREADS (falls back to hardware concurrency).
unsigned worker_threads();

/// Runs fn(i) for i in [0, n) on up to worker_threads() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace projlearn
