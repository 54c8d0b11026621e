#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pedirl/geometry.hpp"

namespace pedirl {

/// The four semantic classes of an intersection map. The index order
/// (Obstacle, Road, Sidewalk, Crosswalk) is canonical and shared by the
/// one-hot block and every shell histogram.
enum class SemanticClass : std::uint8_t {
    Obstacle = 0,
    Road = 1,
    Sidewalk = 2,
    Crosswalk = 3,
};

inline constexpr int kNumClasses = 4;

char class_to_char(SemanticClass c);
SemanticClass class_from_char(char ch);  // throws on unknown characters

/// Rasterized intersection map. Each cell carries exactly one SemanticClass;
/// cells are square with uniform cell_size. Cell (col, row) covers the
/// half-open box [origin + (col, row) * cell_size, origin + (col+1, row+1) * cell_size).
/// Immutable after construction; all queries are pure and thread-safe.
class SemanticGrid {
public:
    SemanticGrid(Point2 origin, double cell_size, int width, int height,
                 std::vector<SemanticClass> labels);

    const Point2& origin() const { return origin_; }
    double cell_size() const { return cell_size_; }
    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t cell_count() const { return labels_.size(); }

    SemanticClass label(int col, int row) const { return labels_[static_cast<std::size_t>(row) * width_ + col]; }
    const std::vector<SemanticClass>& labels() const { return labels_; }

    /// Center point of cell (col, row).
    Point2 cell_center(int col, int row) const {
        return {origin_.x + (col + 0.5) * cell_size_, origin_.y + (row + 0.5) * cell_size_};
    }
    Point2 cell_center(std::size_t index) const {
        const int row = static_cast<int>(index) / width_;
        const int col = static_cast<int>(index) % width_;
        return cell_center(col, row);
    }

    /// Column/row of the cell containing p, or -1/-1 when p is out of bounds.
    /// Membership uses half-open intervals [lo, hi) per axis.
    bool locate(const Point2& p, int& col, int& row) const;

    /// Index of the in-bounds cell nearest to p (out-of-bounds points are
    /// clamped onto the boundary cell).
    std::size_t nearest_cell(const Point2& p) const;

    bool contains(const Point2& p) const {
        int c, r;
        return locate(p, c, r);
    }

    /// True when p lies in the closed extent (boundary included); clamped
    /// dynamics keep trajectories inside this set.
    bool within_extent(const Point2& p) const {
        const Point2 hi = max_corner();
        return p.x >= origin_.x && p.y >= origin_.y && p.x <= hi.x && p.y <= hi.y;
    }

    /// Extent of the mapped region: [min_corner, max_corner).
    Point2 min_corner() const { return origin_; }
    Point2 max_corner() const {
        return {origin_.x + width_ * cell_size_, origin_.y + height_ * cell_size_};
    }

    /// Clamps p into the closed map extent.
    Point2 clamp(const Point2& p) const;

private:
    Point2 origin_;
    double cell_size_;
    int width_;
    int height_;
    std::vector<SemanticClass> labels_;
};

/// Class of the cell containing p. Points outside the grid bounds read as
/// Obstacle; that is defined behavior, not an error.
SemanticClass label_at(const SemanticGrid& grid, const Point2& p);

/// Rigidly transforms the raster. Only rotations that are multiples of 90
/// degrees (plus arbitrary translation) keep the raster exactly representable;
/// anything else throws std::invalid_argument.
SemanticGrid transform_grid(const SemanticGrid& grid, const RigidTransform& t);

/// Map file format:
///   semgrid v1 <width> <height> <cell_size> <origin_x> <origin_y>
/// followed by `height` rows of `width` characters from {#, r, s, c}
/// (Obstacle, Road, Sidewalk, Crosswalk). Rows are written top-down, so the
/// first data line is the row with the largest y.
SemanticGrid read_grid(std::istream& in, const std::string& source_name = "<stream>");
SemanticGrid load_grid(const std::string& path);
void write_grid(std::ostream& out, const SemanticGrid& grid);
void save_grid(const std::string& path, const SemanticGrid& grid);

}  // namespace pedirl
