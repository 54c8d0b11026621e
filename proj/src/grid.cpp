#include "pedirl/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pedirl {

char class_to_char(SemanticClass c) {
    switch (c) {
        case SemanticClass::Obstacle: return '#';
        case SemanticClass::Road: return 'r';
        case SemanticClass::Sidewalk: return 's';
        case SemanticClass::Crosswalk: return 'c';
    }
    throw std::logic_error("class_to_char: bad enum value");
}

SemanticClass class_from_char(char ch) {
    switch (ch) {
        case '#': return SemanticClass::Obstacle;
        case 'r': return SemanticClass::Road;
        case 's': return SemanticClass::Sidewalk;
        case 'c': return SemanticClass::Crosswalk;
        default: break;
    }
    throw std::invalid_argument(std::string("unknown semantic character '") + ch + "'");
}

SemanticGrid::SemanticGrid(Point2 origin, double cell_size, int width, int height,
                           std::vector<SemanticClass> labels)
    : origin_(origin), cell_size_(cell_size), width_(width), height_(height),
      labels_(std::move(labels)) {
    if (cell_size_ <= 0.0) throw std::invalid_argument("SemanticGrid: cell_size must be positive");
    if (width_ <= 0 || height_ <= 0)
        throw std::invalid_argument("SemanticGrid: width and height must be positive");
    if (labels_.size() != static_cast<std::size_t>(width_) * height_)
        throw std::invalid_argument("SemanticGrid: labels length must equal width * height");
}

bool SemanticGrid::locate(const Point2& p, int& col, int& row) const {
    const double fc = std::floor((p.x - origin_.x) / cell_size_);
    const double fr = std::floor((p.y - origin_.y) / cell_size_);
    col = static_cast<int>(fc);
    row = static_cast<int>(fr);
    return fc >= 0.0 && fr >= 0.0 && fc < width_ && fr < height_;
}

std::size_t SemanticGrid::nearest_cell(const Point2& p) const {
    int col, row;
    locate(p, col, row);
    col = std::clamp(col, 0, width_ - 1);
    row = std::clamp(row, 0, height_ - 1);
    return static_cast<std::size_t>(row) * width_ + col;
}

Point2 SemanticGrid::clamp(const Point2& p) const {
    const Point2 hi = max_corner();
    return {std::clamp(p.x, origin_.x, hi.x), std::clamp(p.y, origin_.y, hi.y)};
}

SemanticClass label_at(const SemanticGrid& grid, const Point2& p) {
    int col, row;
    if (!grid.locate(p, col, row)) return SemanticClass::Obstacle;
    return grid.label(col, row);
}

SemanticGrid transform_grid(const SemanticGrid& grid, const RigidTransform& t) {
    const int k = t.quarter_turns();
    if (k < 0)
        throw std::invalid_argument("transform_grid: rotation must be a multiple of 90 degrees");

    const int w = grid.width();
    const int h = grid.height();
    const int new_w = (k % 2 == 0) ? w : h;
    const int new_h = (k % 2 == 0) ? h : w;

    // The new origin is the min corner of the transformed extent.
    const std::array<Point2, 4> corners = {
        t.apply(grid.min_corner()),
        t.apply({grid.max_corner().x, grid.min_corner().y}),
        t.apply(grid.max_corner()),
        t.apply({grid.min_corner().x, grid.max_corner().y}),
    };
    Point2 new_origin = corners[0];
    for (const auto& c : corners) {
        new_origin.x = std::min(new_origin.x, c.x);
        new_origin.y = std::min(new_origin.y, c.y);
    }

    std::vector<SemanticClass> labels(grid.cell_count(), SemanticClass::Obstacle);
    const double cs = grid.cell_size();
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            // Cell centers sit half a cell away from any boundary, so the
            // floor below is immune to rounding in the transform.
            const Point2 moved = t.apply(grid.cell_center(col, row));
            const int nc = static_cast<int>(std::floor((moved.x - new_origin.x) / cs));
            const int nr = static_cast<int>(std::floor((moved.y - new_origin.y) / cs));
            labels[static_cast<std::size_t>(nr) * new_w + nc] = grid.label(col, row);
        }
    }
    return SemanticGrid(new_origin, cs, new_w, new_h, std::move(labels));
}

SemanticGrid read_grid(std::istream& in, const std::string& source_name) {
    auto fail = [&](int line, const std::string& msg) {
        std::ostringstream os;
        os << source_name << ":" << line << ": " << msg;
        throw std::runtime_error(os.str());
    };

    std::string header;
    if (!std::getline(in, header)) fail(1, "missing header line");
    if (!header.empty() && header.back() == '\r') header.pop_back();

    std::istringstream hs(header);
    std::string magic, version;
    int width = 0, height = 0;
    double cell_size = 0.0, ox = 0.0, oy = 0.0;
    if (!(hs >> magic >> version >> width >> height >> cell_size >> ox >> oy) ||
        magic != "semgrid" || version != "v1")
        fail(1, "expected header 'semgrid v1 <width> <height> <cell_size> <origin_x> <origin_y>'");
    if (width <= 0 || height <= 0) fail(1, "width and height must be positive");
    if (cell_size <= 0.0) fail(1, "cell_size must be positive");

    std::vector<SemanticClass> labels(static_cast<std::size_t>(width) * height,
                                      SemanticClass::Obstacle);
    for (int i = 0; i < height; ++i) {
        const int line_no = i + 2;
        std::string line;
        if (!std::getline(in, line)) fail(line_no, "unexpected end of file");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (static_cast<int>(line.size()) != width)
            fail(line_no, "expected " + std::to_string(width) + " characters, got " +
                              std::to_string(line.size()));
        const int row = height - 1 - i;  // file rows are top-down
        for (int col = 0; col < width; ++col) {
            try {
                labels[static_cast<std::size_t>(row) * width + col] = class_from_char(line[col]);
            } catch (const std::invalid_argument& e) {
                fail(line_no, e.what());
            }
        }
    }
    return SemanticGrid({ox, oy}, cell_size, width, height, std::move(labels));
}

SemanticGrid load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open map file");
    return read_grid(in, path);
}

void write_grid(std::ostream& out, const SemanticGrid& grid) {
    std::ostringstream header;
    header.precision(17);
    header << "semgrid v1 " << grid.width() << " " << grid.height() << " " << grid.cell_size()
           << " " << grid.origin().x << " " << grid.origin().y;
    out << header.str() << "\n";
    for (int row = grid.height() - 1; row >= 0; --row) {
        for (int col = 0; col < grid.width(); ++col) out << class_to_char(grid.label(col, row));
        out << "\n";
    }
}

void save_grid(const std::string& path, const SemanticGrid& grid) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    write_grid(out, grid);
}

}  // namespace pedirl
