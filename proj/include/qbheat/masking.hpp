#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qbheat {

enum class Position { corner_tl, corner_tr, corner_bl, corner_br, center };

/// Prediction directions. Declaration order is the tie-break order used by
/// the center layout: axis directions first, then diagonals.
enum class Direction { right, down, left, up, down_right, down_left, up_right, up_left };

inline constexpr std::array<Direction, 8> kAllDirections = {
    Direction::right,      Direction::down,      Direction::left,     Direction::up,
    Direction::down_right, Direction::down_left, Direction::up_right, Direction::up_left};

std::string_view to_string(Direction d);
std::string_view to_string(Position p);
std::optional<Direction> parse_direction(std::string_view tag);
/// Accepts long names ("corner-TL") and the CLI short forms ("tl", "center").
std::optional<Position> parse_position(std::string_view tag);

struct Offset {
    int dx;  ///< columns, +1 is right
    int dy;  ///< rows, +1 is down
};

/// Unit signs of a direction, e.g. down_left = {-1, +1}.
Offset direction_sign(Direction d);
bool is_diagonal(Direction d);
bool is_horizontal(Direction d);
bool is_vertical(Direction d);

struct Rect {
    std::size_t row0 = 0;
    std::size_t col0 = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    bool contains(std::size_t r, std::size_t c) const {
        return r >= row0 && r < row0 + rows && c >= col0 && c < col0 + cols;
    }
    std::size_t area() const { return rows * cols; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

struct Cell {
    std::size_t row;
    std::size_t col;
    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct CellPair {
    Cell source;
    Cell target;
    friend bool operator==(const CellPair&, const CellPair&) = default;
};

struct QuarterLayout {
    std::size_t height = 0;
    std::size_t width = 0;
    Position position = Position::corner_tl;
    std::size_t dx_cells = 0;
    std::size_t dy_cells = 0;
    Rect unmasked;
    std::vector<Rect> sub_blocks;  ///< four (H/4)×(W/4) blocks for the center layout

    bool is_center() const { return position == Position::center; }
    bool is_masked(std::size_t r, std::size_t c) const { return !unmasked.contains(r, c); }
    std::size_t masked_count() const { return height * width - unmasked.area(); }
    Offset offset(Direction d) const;
};

/// Corner layouts need even H, W and predict across half the field; the
/// center layout needs H, W divisible by 4 and predicts across a quarter.
QuarterLayout make_layout(std::size_t height, std::size_t width, Position position);

/// Directions that reach masked cells from this layout, in Direction order.
std::vector<Direction> applicable_directions(const QuarterLayout& layout);

/// Source→target pairs for one direction, sorted by source cell. Center
/// cells reachable from several sub-blocks go to the smallest offset,
/// ties broken by Direction order.
std::vector<CellPair> pair_indices(const QuarterLayout& layout, Direction direction);

}  // namespace qbheat
