#include "projlearn/errors.hpp"
#include "projlearn/evaluation.hpp"
#include "projlearn/raster.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace projlearn;
namespace fs = std::filesystem;

namespace {

const std::array<std::uint8_t, 3> kWhite{255, 255, 255};

// Connected non-white regions, 4-neighbourhood.
int count_blobs(const RgbImage& img) {
    std::vector<char> seen(static_cast<std::size_t>(img.width * img.height), 0);
    int blobs = 0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (seen[static_cast<std::size_t>(y * img.width + x)] || img.at(x, y) == kWhite) continue;
            ++blobs;
            std::vector<std::array<int, 2>> stack{{x, y}};
            seen[static_cast<std::size_t>(y * img.width + x)] = 1;
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                for (auto [dx, dy] : {std::array{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                    const int nx = cx + dx, ny = cy + dy;
                    if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
                    auto& s = seen[static_cast<std::size_t>(ny * img.width + nx)];
                    if (s || img.at(nx, ny) == kWhite) continue;
                    s = 1;
                    stack.push_back({nx, ny});
                }
            }
        }
    }
    return blobs;
}

}  // namespace

TEST_CASE("ppm and pgm encodings") {
    RgbImage rgb{2, 1, {255, 0, 0, 0, 0, 255}};
    CHECK(encode_ppm(rgb) == std::string("P6\n2 1\n255\n") + std::string("\xff\x00\x00\x00\x00\xff", 6));
    Gray8 g8{3, 1, {0, 128, 255}};
    CHECK(encode_pgm(g8) == std::string("P5\n3 1\n255\n") + std::string("\x00\x80\xff", 3));
    Gray16 g16{2, 1, {0x0102, 0xffff}};
    CHECK(encode_pgm(g16) == std::string("P5\n2 1\n65535\n") + std::string("\x01\x02\xff\xff", 4));

    const auto dir = fs::temp_directory_path() / "projlearn_test_raster";
    fs::create_directories(dir);
    write_pgm(dir / "g.pgm", g16);
    std::ifstream in(dir / "g.pgm", std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    CHECK(s.str() == encode_pgm(g16));
}

TEST_CASE("palette wraps after ten colours") {
    std::set<std::array<std::uint8_t, 3>> colours;
    for (int k = 0; k < 10; ++k) colours.insert(palette_color(k));
    CHECK(colours.size() == 10);
    CHECK(palette_color(12) == palette_color(2));
    CHECK_FALSE(colours.contains(kWhite));
}

TEST_CASE("scatter: single point lands in the center") {
    ScatterStyle style{.size = 101, .radius = 2};
    Matrix one(1, 2);
    one << 3.5, -7.0;
    const auto layout = scatter_layout(one, style);
    CHECK(layout[0] == std::array<int, 2>{50, 50});
    const auto img = render_scatter(one, std::nullopt, style);
    CHECK(img.at(50, 50) != kWhite);
    CHECK(img.at(0, 0) == kWhite);
    CHECK(count_blobs(img) == 1);
}

TEST_CASE("scatter: translation invariance and one disc per point") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    ScatterStyle style{.size = 400, .radius = 2};
    for (int trial = 0; trial < 10; ++trial) {
        // points on a coarse lattice so discs never touch
        std::set<std::array<int, 2>> cells;
        while (cells.size() < 12) cells.insert({static_cast<int>(u(rng) / 10), static_cast<int>(u(rng) / 10)});
        Matrix coords(static_cast<Index>(cells.size()), 2);
        Index i = 0;
        for (auto [a, b] : cells) coords.row(i++) << 10.0 * a, 10.0 * b;
        std::vector<int> labels(cells.size());
        for (std::size_t k = 0; k < labels.size(); ++k) labels[k] = static_cast<int>(k % 3);

        const auto img = render_scatter(coords, labels, style);
        Matrix moved = coords;
        moved.col(0).array() += 1234.0;
        moved.col(1).array() -= 55.5;
        CHECK(render_scatter(moved, labels, style).pixels == img.pixels);
        CHECK(count_blobs(img) == static_cast<int>(cells.size()));

        const auto layout = scatter_layout(coords, style);
        std::set<std::array<int, 2>> centers(layout.begin(), layout.end());
        CHECK(centers.size() == cells.size());
    }
}

TEST_CASE("scatter: colours follow labels and empty input is rejected") {
    Matrix two(2, 2);
    two << 0, 0, 1, 1;
    ScatterStyle style{.size = 64, .radius = 1};
    const auto img = render_scatter(two, std::vector<int>{4, 7}, style);
    const auto layout = scatter_layout(two, style);
    CHECK(img.at(layout[0][0], layout[0][1]) == palette_color(4));
    CHECK(img.at(layout[1][0], layout[1][1]) == palette_color(7));
    // y grows upwards
    CHECK(layout[1][1] < layout[0][1]);
    CHECK_THROWS_AS(render_scatter(Matrix(0, 2), std::nullopt), DataError);
}

TEST_CASE("gradient map rendering is min-max normalized") {
    GradientMap map;
    map.width = 3;
    map.height = 1;
    map.values.resize(1, 3);
    map.values << 2.0, 4.0, 3.0;
    const auto img = render_gradient_map(map);
    CHECK(img.pixels == std::vector<std::uint16_t>{0, 65535, 32768});
    map.values.setConstant(1.0);
    CHECK(render_gradient_map(map).pixels == std::vector<std::uint16_t>{0, 0, 0});
}

TEST_CASE("tiles clamp, quantize and leave a gap") {
    Matrix samples(2, 4);
    samples << 0.0, 1.0, -0.5, 2.0, 0.5, 0.25, 0.75, 1.0;
    const auto img = tile_images(samples, 2, 2);
    CHECK(img.width == 5);
    CHECK(img.height == 2);
    CHECK(img.pixels[0] == 0);
    CHECK(img.pixels[1] == 255);
    CHECK(img.pixels[5] == 0);
    CHECK(img.pixels[6] == 255);
    CHECK(img.pixels[3] == 128);
    CHECK_THROWS_AS(tile_images(samples, 3, 2), DataError);
}
