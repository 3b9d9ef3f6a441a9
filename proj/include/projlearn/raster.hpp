#pragma once

#include "projlearn/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace projlearn {

struct GradientMap;

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major RGB triples

    std::array<std::uint8_t, 3> at(int x, int y) const;
};

template <class T>
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<T> pixels;  // row-major
};

using Gray8 = GrayImage<std::uint8_t>;
using Gray16 = GrayImage<std::uint16_t>;

std::string encode_ppm(const RgbImage& img);
std::string encode_pgm(const Gray8& img);
/// 16-bit binary PGM (maxval 65535, big-endian samples).
std::string encode_pgm(const Gray16& img);

void write_ppm(const std::filesystem::path& path, const RgbImage& img);
void write_pgm(const std::filesystem::path& path, const Gray8& img);
void write_pgm(const std::filesystem::path& path, const Gray16& img);

/// Fixed 10-colour categorical palette; labels wrap around.
std::array<std::uint8_t, 3> palette_color(int label);

struct ScatterStyle {
    int size = 512;
    int radius = 3;
    double margin_fraction = 0.05;
};

/// Pixel centers of the discs: min-max fit of each axis into the image with a
/// margin; a zero-extent axis maps to the image center. y grows upwards.
std::vector<std::array<int, 2>> scatter_layout(const Matrix& coords, const ScatterStyle& style);

/// White canvas with one filled disc per point, coloured by label.
RgbImage render_scatter(const Matrix& coords, const std::optional<std::vector<int>>& labels,
                        const ScatterStyle& style = {});

/// Linear min-max normalization of the raw gradient values to 16-bit gray.
Gray16 render_gradient_map(const GradientMap& map);

/// Rows of `samples` reshaped to rows x cols tiles, values clamped to [0, 1]
/// and quantized to 8 bits, laid out left to right with a 1-pixel gap.
Gray8 tile_images(const Matrix& samples, Index rows, Index cols);

}  // namespace projlearn
