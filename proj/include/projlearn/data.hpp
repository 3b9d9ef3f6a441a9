#pragma once

#include "projlearn/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace projlearn {

struct Dataset {
    Matrix values;
    std::optional<std::vector<int>> labels;
    std::string name;

    Index rows() const { return values.rows(); }
    Index cols() const { return values.cols(); }

    /// Throws DataError unless n >= 1, d >= 1, all values are finite and the
    /// label vector (if any) has n entries.
    void validate() const;
};

/// Per-dimension z-scoring. `scale` is strictly positive.
struct Standardizer {
    Vector mean;
    Vector scale;

    Index dim() const { return mean.size(); }
};

struct SplitIndices {
    std::vector<Index> train;
    std::vector<Index> test;
    std::uint64_t seed = 0;
};

/// Three unit circles in the xy, xz and yz planes, linked as a chain.
///
///   ring 0: center (0, 0, 0),          (cos t, sin t, 0)
///   ring 1: center (1, 0, 0),          (1 + cos t, 0, sin t)
///   ring 2: center (1.5, 0, sqrt(3)/2), (1.5, sin t, sqrt(3)/2 + cos t)
///
/// Ring 1 pierces the disc of ring 0 at the origin; ring 2 is pierced by
/// ring 1 at its own center. Each ring gets `points_per_ring` equally spaced
/// angles starting from a seed-dependent phase. Labels are the ring index.
Dataset generate_rings(int points_per_ring, std::uint64_t seed);

struct RingGeometry {
    Eigen::Vector3d center;
    Eigen::Vector3d normal;
};
/// Center and plane normal of ring `k` (0, 1 or 2) as produced by generate_rings.
RingGeometry ring_geometry(int k);

struct CsvOptions {
    bool has_labels = false;   // last column is an integer class
    bool skip_header = false;  // drop the first line
};

Dataset parse_csv(std::istream& in, const CsvOptions& options, const std::string& name = "csv");
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
/// Single integer column, one label per line.
std::vector<int> load_labels_csv(const std::filesystem::path& path);

/// MNIST-style IDX pair. Pixels are scaled to [0, 1] by dividing by 255.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct IdxShape {
    Index rows = 0;
    Index cols = 0;
};
/// Image geometry stored in an IDX image header.
IdxShape read_idx_shape(const std::filesystem::path& images_path);

inline constexpr double kStandardizerEpsilon = 1e-12;

/// Column means and population standard deviations; any deviation below
/// `epsilon` is replaced by 1 so constant columns map to 0.
Standardizer fit_standardizer(const Matrix& m, double epsilon = kStandardizerEpsilon);
Standardizer fit_standardizer(const Dataset& data, double epsilon = kStandardizerEpsilon);

Matrix apply_standardizer(const Standardizer& s, const Matrix& m);
Matrix invert_standardizer(const Standardizer& s, const Matrix& m);

/// Seeded random 80/20-style split; |test| = round(fraction_test * n).
SplitIndices split(Index n, double fraction_test, std::uint64_t seed);

Matrix select_rows(const Matrix& m, std::span<const Index> rows);

}  // namespace projlearn
