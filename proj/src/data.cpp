#include "projlearn/data.hpp"

#include "projlearn/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace projlearn {

void Dataset::validate() const {
    if (values.rows() < 1 || values.cols() < 1)
        throw DataError("dataset '" + name + "' is empty");
    if (!values.allFinite()) throw DataError("dataset '" + name + "' contains non-finite values");
    if (labels && static_cast<Index>(labels->size()) != values.rows())
        throw DataError("dataset '" + name + "' has " + std::to_string(labels->size()) +
                        " labels for " + std::to_string(values.rows()) + " rows");
}

RingGeometry ring_geometry(int k) {
    const double h = std::numbers::sqrt3 / 2.0;
    switch (k) {
        case 0: return {{0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}};
        case 1: return {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
        case 2: return {{1.5, 0.0, h}, {1.0, 0.0, 0.0}};
        default: throw UsageError("ring index must be 0, 1 or 2");
    }
}

Dataset generate_rings(int points_per_ring, std::uint64_t seed) {
    if (points_per_ring < 3) throw UsageError("points_per_ring must be at least 3");
    Rng rng(seed);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);

    Dataset out;
    out.name = "rings";
    out.values.resize(3 * points_per_ring, 3);
    out.labels.emplace();
    out.labels->reserve(3 * points_per_ring);
    const double h = std::numbers::sqrt3 / 2.0;
    for (int ring = 0; ring < 3; ++ring) {
        const double phase = phase_dist(rng);
        for (int i = 0; i < points_per_ring; ++i) {
            const double t = phase + 2.0 * std::numbers::pi * i / points_per_ring;
            const double c = std::cos(t);
            const double s = std::sin(t);
            const Index row = ring * points_per_ring + i;
            switch (ring) {
                case 0: out.values.row(row) << c, s, 0.0; break;
                case 1: out.values.row(row) << 1.0 + c, 0.0, s; break;
                default: out.values.row(row) << 1.5, s, h + c; break;
            }
            out.labels->push_back(ring);
        }
    }
    return out;
}

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_number(const std::string& cell, double& v) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
    return ec == std::errc{} && ptr == cell.data() + cell.size() && std::isfinite(v);
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

}  // namespace

Dataset parse_csv(std::istream& in, const CsvOptions& options, const std::string& name) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && options.skip_header) continue;
        if (trim(line).empty()) continue;
        auto cells = split_cells(line);
        const std::size_t row_no = rows.size() + 1;
        if (rows.empty()) {
            width = cells.size();
        } else if (cells.size() != width) {
            throw DataError(name + ": row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " columns, expected " +
                            std::to_string(width));
        }
        std::vector<double> values(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (!parse_number(cells[j], values[j]))
                throw DataError(name + ": non-numeric cell '" + cells[j] + "' at row " +
                                std::to_string(row_no) + ", column " + std::to_string(j + 1));
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw DataError(name + ": no data rows");
    const std::size_t d = options.has_labels ? width - 1 : width;
    if (d < 1) throw DataError(name + ": no feature columns");

    Dataset out;
    out.name = name;
    out.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(d));
    if (options.has_labels) out.labels.emplace(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) out.values(i, j) = rows[i][j];
        if (options.has_labels) {
            const double l = rows[i][d];
            if (l != std::floor(l))
                throw DataError(name + ": label at row " + std::to_string(i + 1) + " is not an integer");
            (*out.labels)[i] = static_cast<int>(l);
        }
    }
    out.validate();
    return out;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    auto out = parse_csv(in, options, path.string());
    out.name = path.stem().string();
    return out;
}

std::vector<int> load_labels_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    auto table = parse_csv(in, {}, path.string());
    if (table.cols() != 1) throw DataError(path.string() + ": labels file must have one column");
    std::vector<int> labels(table.rows());
    for (Index i = 0; i < table.rows(); ++i) labels[i] = static_cast<int>(table.values(i, 0));
    return labels;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& what) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw DataError(what + ": truncated header");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxImageHeader {
    std::uint32_t count, rows, cols;
};

IdxImageHeader read_image_header(std::istream& in, const std::string& name) {
    const auto magic = read_be32(in, name);
    if (magic != kIdxImagesMagic) {
        std::ostringstream msg;
        msg << name << ": bad IDX image magic 0x" << std::hex << magic;
        throw DataError(msg.str());
    }
    IdxImageHeader h{};
    h.count = read_be32(in, name);
    h.rows = read_be32(in, name);
    h.cols = read_be32(in, name);
    return h;
}

}  // namespace

IdxShape read_idx_shape(const std::filesystem::path& images_path) {
    std::ifstream in(images_path, std::ios::binary);
    if (!in) throw DataError("cannot open " + images_path.string());
    auto h = read_image_header(in, images_path.string());
    return {static_cast<Index>(h.rows), static_cast<Index>(h.cols)};
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError("cannot open " + images_path.string());
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError("cannot open " + labels_path.string());

    const auto header = read_image_header(img, images_path.string());
    const auto label_magic = read_be32(lab, labels_path.string());
    if (label_magic != kIdxLabelsMagic) {
        std::ostringstream msg;
        msg << labels_path.string() << ": bad IDX label magic 0x" << std::hex << label_magic;
        throw DataError(msg.str());
    }
    const auto label_count = read_be32(lab, labels_path.string());
    if (label_count != header.count)
        throw DataError("IDX count mismatch: " + std::to_string(header.count) + " images vs " +
                        std::to_string(label_count) + " labels");

    const std::size_t d = std::size_t{header.rows} * header.cols;
    Dataset out;
    out.name = images_path.stem().string();
    out.values.resize(header.count, static_cast<Index>(d));
    std::vector<unsigned char> buf(d);
    for (std::uint32_t i = 0; i < header.count; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(d)))
            throw DataError(images_path.string() + ": truncated at image " + std::to_string(i));
        for (std::size_t j = 0; j < d; ++j) out.values(i, j) = buf[j] / 255.0;
    }
    std::vector<unsigned char> lbuf(header.count);
    if (!lab.read(reinterpret_cast<char*>(lbuf.data()), header.count))
        throw DataError(labels_path.string() + ": truncated label data");
    out.labels.emplace(lbuf.begin(), lbuf.end());
    out.validate();
    return out;
}

Standardizer fit_standardizer(const Matrix& m, double epsilon) {
    if (m.rows() < 2) throw DataError("standardizer needs at least 2 rows");
    Standardizer s;
    s.mean = m.colwise().mean().transpose();
    s.scale.resize(m.cols());
    for (Index j = 0; j < m.cols(); ++j) {
        const double var = (m.col(j).array() - s.mean(j)).square().mean();
        const double sd = std::sqrt(var);
        s.scale(j) = sd < epsilon ? 1.0 : sd;
    }
    return s;
}

Standardizer fit_standardizer(const Dataset& data, double epsilon) {
    return fit_standardizer(data.values, epsilon);
}

namespace {
void check_width(const Standardizer& s, const Matrix& m) {
    if (m.cols() != s.dim())
        throw DataError("standardizer expects " + std::to_string(s.dim()) + " columns, got " +
                        std::to_string(m.cols()));
}
}  // namespace

Matrix apply_standardizer(const Standardizer& s, const Matrix& m) {
    check_width(s, m);
    return ((m.rowwise() - s.mean.transpose()).array().rowwise() / s.scale.transpose().array()).matrix();
}

Matrix invert_standardizer(const Standardizer& s, const Matrix& m) {
    check_width(s, m);
    return ((m.array().rowwise() * s.scale.transpose().array()).rowwise() + s.mean.transpose().array())
        .matrix();
}

SplitIndices split(Index n, double fraction_test, std::uint64_t seed) {
    if (n < 2) throw UsageError("split needs at least 2 rows");
    if (!(fraction_test > 0.0 && fraction_test < 1.0))
        throw UsageError("test fraction must lie in (0, 1)");
    std::vector<Index> perm(n);
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng(seed);
    // Fisher-Yates with our own index draws; std::shuffle's algorithm is unspecified.
    for (Index i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<Index> pick(0, i);
        std::swap(perm[i], perm[pick(rng)]);
    }
    const auto n_test = static_cast<Index>(std::llround(fraction_test * static_cast<double>(n)));
    SplitIndices out;
    out.seed = seed;
    out.test.assign(perm.begin(), perm.begin() + n_test);
    out.train.assign(perm.begin() + n_test, perm.end());
    std::sort(out.test.begin(), out.test.end());
    std::sort(out.train.begin(), out.train.end());
    return out;
}

Matrix select_rows(const Matrix& m, std::span<const Index> rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= m.rows()) throw DataError("row index out of range");
        out.row(static_cast<Index>(i)) = m.row(rows[i]);
    }
    return out;
}

}  // namespace projlearn
