#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace projlearn {

/// Sample-major matrix: one row per sample, one column per feature.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

using Rng = std::mt19937_64;

}  // namespace projlearn
