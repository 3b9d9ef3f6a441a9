#include "projlearn/raster.hpp"

#include "projlearn/errors.hpp"
#include "projlearn/evaluation.hpp"
#include "projlearn/io.hpp"

#include <algorithm>
#include <cmath>

namespace projlearn {

std::array<std::uint8_t, 3> RgbImage::at(int x, int y) const {
    const std::size_t o = 3 * (static_cast<std::size_t>(y) * width + x);
    return {pixels[o], pixels[o + 1], pixels[o + 2]};
}

std::string encode_ppm(const RgbImage& img) {
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(img.pixels.begin(), img.pixels.end());
    return out;
}

std::string encode_pgm(const Gray8& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(img.pixels.begin(), img.pixels.end());
    return out;
}

std::string encode_pgm(const Gray16& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n65535\n";
    out.reserve(out.size() + 2 * img.pixels.size());
    for (std::uint16_t v : img.pixels) {
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xff));
    }
    return out;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) { write_file_atomic(path, encode_ppm(img)); }
void write_pgm(const std::filesystem::path& path, const Gray8& img) { write_file_atomic(path, encode_pgm(img)); }
void write_pgm(const std::filesystem::path& path, const Gray16& img) { write_file_atomic(path, encode_pgm(img)); }

std::array<std::uint8_t, 3> palette_color(int label) {
    // Tableau 10
    static constexpr std::array<std::array<std::uint8_t, 3>, 10> colors{{
        {31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189},
        {140, 86, 75}, {227, 119, 194}, {127, 127, 127}, {188, 189, 34}, {23, 190, 207},
    }};
    const int k = ((label % 10) + 10) % 10;
    return colors[static_cast<std::size_t>(k)];
}

std::vector<std::array<int, 2>> scatter_layout(const Matrix& coords, const ScatterStyle& style) {
    if (coords.rows() == 0) throw DataError("scatter plot needs at least one point");
    if (coords.cols() != 2) throw DataError("scatter plot needs n x 2 coordinates");
    const double span = style.size - 1;
    const double inner = span * (1.0 - 2.0 * style.margin_fraction);
    auto axis = [&](Index col) {
        const double lo = coords.col(col).minCoeff();
        const double hi = coords.col(col).maxCoeff();
        return std::pair{lo, hi - lo};
    };
    const auto [x0, xr] = axis(0);
    const auto [y0, yr] = axis(1);
    std::vector<std::array<int, 2>> centers;
    centers.reserve(static_cast<std::size_t>(coords.rows()));
    for (Index i = 0; i < coords.rows(); ++i) {
        const double u = xr > 0 ? (coords(i, 0) - x0) / xr : 0.5;
        const double v = yr > 0 ? (coords(i, 1) - y0) / yr : 0.5;
        const double px = span * style.margin_fraction + u * inner;
        const double py = span * style.margin_fraction + (1.0 - v) * inner;
        centers.push_back({static_cast<int>(std::lround(px)), static_cast<int>(std::lround(py))});
    }
    return centers;
}

RgbImage render_scatter(const Matrix& coords, const std::optional<std::vector<int>>& labels,
                        const ScatterStyle& style) {
    if (labels && static_cast<Index>(labels->size()) != coords.rows())
        throw DataError("scatter plot: label count does not match point count");
    const auto centers = scatter_layout(coords, style);
    RgbImage img{style.size, style.size,
                 std::vector<std::uint8_t>(3 * static_cast<std::size_t>(style.size) * style.size, 255)};
    const int r = style.radius;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const auto color = palette_color(labels ? (*labels)[i] : 0);
        const auto [cx, cy] = centers[i];
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (dx * dx + dy * dy > r * r) continue;
                const int x = cx + dx;
                const int y = cy + dy;
                if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
                const std::size_t o = 3 * (static_cast<std::size_t>(y) * img.width + x);
                std::copy(color.begin(), color.end(), img.pixels.begin() + static_cast<std::ptrdiff_t>(o));
            }
    }
    return img;
}

Gray16 render_gradient_map(const GradientMap& map) {
    Gray16 img{map.width, map.height, std::vector<std::uint16_t>(static_cast<std::size_t>(map.width) * map.height)};
    const double lo = map.values.minCoeff();
    const double range = map.values.maxCoeff() - lo;
    for (int r = 0; r < map.height; ++r)
        for (int c = 0; c < map.width; ++c) {
            const double t = range > 0 ? (map.values(r, c) - lo) / range : 0.0;
            img.pixels[static_cast<std::size_t>(r) * map.width + c] =
                static_cast<std::uint16_t>(std::lround(t * 65535.0));
        }
    return img;
}

Gray8 tile_images(const Matrix& samples, Index rows, Index cols) {
    if (rows * cols != samples.cols())
        throw DataError("tile shape " + std::to_string(rows) + "x" + std::to_string(cols) + " does not match width " +
                        std::to_string(samples.cols()));
    const Index k = samples.rows();
    Gray8 img;
    img.width = static_cast<int>(k * cols + (k - 1));
    img.height = static_cast<int>(rows);
    img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 255);
    for (Index t = 0; t < k; ++t)
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < cols; ++c) {
                const double v = std::clamp(samples(t, r * cols + c), 0.0, 1.0);
                img.pixels[static_cast<std::size_t>(r * img.width + t * (cols + 1) + c)] =
                    static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
    return img;
}

}  // namespace projlearn
