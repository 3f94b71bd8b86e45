#include "qbheat/masking.hpp"

#include <algorithm>
#include <limits>

#include "qbheat/error.hpp"

namespace qbheat {

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::right: return "right";
        case Direction::down: return "down";
        case Direction::left: return "left";
        case Direction::up: return "up";
        case Direction::down_right: return "down-right";
        case Direction::down_left: return "down-left";
        case Direction::up_right: return "up-right";
        case Direction::up_left: return "up-left";
    }
    return "?";
}

std::string_view to_string(Position p) {
    switch (p) {
        case Position::corner_tl: return "corner-TL";
        case Position::corner_tr: return "corner-TR";
        case Position::corner_bl: return "corner-BL";
        case Position::corner_br: return "corner-BR";
        case Position::center: return "center";
    }
    return "?";
}

std::optional<Direction> parse_direction(std::string_view tag) {
    for (Direction d : kAllDirections) {
        if (to_string(d) == tag) return d;
    }
    return std::nullopt;
}

std::optional<Position> parse_position(std::string_view tag) {
    if (tag == "tl" || tag == "corner-TL") return Position::corner_tl;
    if (tag == "tr" || tag == "corner-TR") return Position::corner_tr;
    if (tag == "bl" || tag == "corner-BL") return Position::corner_bl;
    if (tag == "br" || tag == "corner-BR") return Position::corner_br;
    if (tag == "center") return Position::center;
    return std::nullopt;
}

Offset direction_sign(Direction d) {
    switch (d) {
        case Direction::right: return {1, 0};
        case Direction::down: return {0, 1};
        case Direction::left: return {-1, 0};
        case Direction::up: return {0, -1};
        case Direction::down_right: return {1, 1};
        case Direction::down_left: return {-1, 1};
        case Direction::up_right: return {1, -1};
        case Direction::up_left: return {-1, -1};
    }
    return {0, 0};
}

bool is_diagonal(Direction d) {
    const auto s = direction_sign(d);
    return s.dx != 0 && s.dy != 0;
}

bool is_horizontal(Direction d) { return d == Direction::right || d == Direction::left; }
bool is_vertical(Direction d) { return d == Direction::down || d == Direction::up; }

Offset QuarterLayout::offset(Direction d) const {
    const auto s = direction_sign(d);
    return {s.dx * static_cast<int>(dx_cells), s.dy * static_cast<int>(dy_cells)};
}

QuarterLayout make_layout(std::size_t height, std::size_t width, Position position) {
    QuarterLayout layout;
    layout.height = height;
    layout.width = width;
    layout.position = position;
    if (position == Position::center) {
        if (height < 4 || width < 4 || height % 4 != 0 || width % 4 != 0) {
            throw LayoutError("make_layout: center layout needs H and W divisible by 4, got " + std::to_string(height) +
                              "x" + std::to_string(width));
        }
        const std::size_t qh = height / 4, qw = width / 4;
        layout.dx_cells = qw;
        layout.dy_cells = qh;
        layout.unmasked = {qh, qw, 2 * qh, 2 * qw};
        layout.sub_blocks = {{qh, qw, qh, qw}, {qh, 2 * qw, qh, qw}, {2 * qh, qw, qh, qw}, {2 * qh, 2 * qw, qh, qw}};
        return layout;
    }
    if (height < 2 || width < 2 || height % 2 != 0 || width % 2 != 0) {
        throw LayoutError("make_layout: corner layouts need even H and W, got " + std::to_string(height) + "x" +
                          std::to_string(width));
    }
    const std::size_t hh = height / 2, hw = width / 2;
    layout.dx_cells = hw;
    layout.dy_cells = hh;
    const bool right_half = position == Position::corner_tr || position == Position::corner_br;
    const bool bottom_half = position == Position::corner_bl || position == Position::corner_br;
    layout.unmasked = {bottom_half ? hh : 0, right_half ? hw : 0, hh, hw};
    return layout;
}

namespace {

std::optional<Cell> shifted(const QuarterLayout& layout, Cell c, Offset o) {
    const long long r = static_cast<long long>(c.row) + o.dy;
    const long long col = static_cast<long long>(c.col) + o.dx;
    if (r < 0 || col < 0 || r >= static_cast<long long>(layout.height) || col >= static_cast<long long>(layout.width)) {
        return std::nullopt;
    }
    return Cell{static_cast<std::size_t>(r), static_cast<std::size_t>(col)};
}

std::vector<CellPair> corner_pairs(const QuarterLayout& layout, Direction direction) {
    const Offset o = layout.offset(direction);
    const Rect& src = layout.unmasked;
    std::vector<CellPair> pairs;
    pairs.reserve(src.area());
    for (std::size_t r = src.row0; r < src.row0 + src.rows; ++r)
        for (std::size_t c = src.col0; c < src.col0 + src.cols; ++c) {
            const auto t = shifted(layout, {r, c}, o);
            if (!t || !layout.is_masked(t->row, t->col)) return {};
            pairs.push_back({{r, c}, *t});
        }
    return pairs;
}

struct Assignment {
    long long magnitude2 = std::numeric_limits<long long>::max();
    int direction = -1;
    Cell source{};
};

std::vector<Assignment> center_assignment(const QuarterLayout& layout) {
    std::vector<Assignment> grid(layout.height * layout.width);
    for (const Rect& block : layout.sub_blocks) {
        for (std::size_t di = 0; di < kAllDirections.size(); ++di) {
            const Offset o = layout.offset(kAllDirections[di]);
            const long long mag2 = static_cast<long long>(o.dx) * o.dx + static_cast<long long>(o.dy) * o.dy;
            for (std::size_t r = block.row0; r < block.row0 + block.rows; ++r)
                for (std::size_t c = block.col0; c < block.col0 + block.cols; ++c) {
                    const auto t = shifted(layout, {r, c}, o);
                    if (!t || !layout.is_masked(t->row, t->col)) continue;
                    Assignment& slot = grid[t->row * layout.width + t->col];
                    const int dir = static_cast<int>(di);
                    if (mag2 < slot.magnitude2 || (mag2 == slot.magnitude2 && dir < slot.direction)) {
                        slot = {mag2, dir, {r, c}};
                    }
                }
        }
    }
    return grid;
}

std::vector<CellPair> center_pairs(const QuarterLayout& layout, Direction direction) {
    const auto grid = center_assignment(layout);
    std::vector<CellPair> pairs;
    for (std::size_t r = 0; r < layout.height; ++r)
        for (std::size_t c = 0; c < layout.width; ++c) {
            const Assignment& a = grid[r * layout.width + c];
            if (a.direction >= 0 && kAllDirections[static_cast<std::size_t>(a.direction)] == direction) {
                pairs.push_back({a.source, {r, c}});
            }
        }
    std::sort(pairs.begin(), pairs.end(), [](const CellPair& x, const CellPair& y) { return x.source < y.source; });
    return pairs;
}

}  // namespace

std::vector<Direction> applicable_directions(const QuarterLayout& layout) {
    std::vector<Direction> out;
    for (Direction d : kAllDirections) {
        const auto pairs = layout.is_center() ? center_pairs(layout, d) : corner_pairs(layout, d);
        if (!pairs.empty()) out.push_back(d);
    }
    return out;
}

std::vector<CellPair> pair_indices(const QuarterLayout& layout, Direction direction) {
    auto pairs = layout.is_center() ? center_pairs(layout, direction) : corner_pairs(layout, direction);
    if (pairs.empty()) {
        throw LayoutError("pair_indices: direction " + std::string(to_string(direction)) + " reaches no masked cell from " +
                          std::string(to_string(layout.position)) + " layout");
    }
    return pairs;
}

}  // namespace qbheat
