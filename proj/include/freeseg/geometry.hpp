#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freeseg/imaging.hpp"

namespace freeseg {

enum class EndpointKind {
    Closed,
    Free,
    BoundaryLeft,    // x = 0
    BoundaryRight,   // x = nx * h
    BoundaryBottom,  // y = 0
    BoundaryTop,     // y = ny * h
};

bool is_boundary(EndpointKind kind);
std::string_view to_string(EndpointKind kind);
EndpointKind parse_endpoint_kind(std::string_view token);

enum class CurveEnd { Start, End };

/// Polygonal curve. Closed curves store each node once and index periodically; open curves
/// run from nodes.front() (parameter 0) to nodes.back() (parameter 1).
struct PolygonalCurve {
    int id = 0;
    std::vector<Vec2> nodes;
    EndpointKind start = EndpointKind::Free;
    EndpointKind end = EndpointKind::Free;
    // Free endpoints stopped at a triple junction; they no longer evolve.
    bool frozen_start = false;
    bool frozen_end = false;

    bool closed() const noexcept { return start == EndpointKind::Closed; }
    std::size_t size() const noexcept { return nodes.size(); }
    std::size_t segment_count() const noexcept { return closed() ? nodes.size() : nodes.size() - 1; }
    EndpointKind kind(CurveEnd which) const { return which == CurveEnd::Start ? start : end; }
    bool is_free(CurveEnd which) const { return kind(which) == EndpointKind::Free; }
    bool is_frozen(CurveEnd which) const { return which == CurveEnd::Start ? frozen_start : frozen_end; }
    // Node index with periodic wrap for closed curves.
    const Vec2& node(std::ptrdiff_t j) const;
};

struct CurveNetwork {
    std::vector<PolygonalCurve> curves;
    Domain domain;

    const PolygonalCurve* find(int id) const;
    int next_id() const;
};

// Throws GeometryError when a curve or network invariant is violated.
void validate(const PolygonalCurve& curve, const Domain& domain);
void validate(const CurveNetwork& network);

// Lengths of segment k = [X_k, X_{k+1}] (wrapping for closed curves).
std::vector<double> segment_lengths(const PolygonalCurve& curve);
double curve_length(const PolygonalCurve& curve);
double total_length(const CurveNetwork& network);

/// Unit normal (X_j - X_{j-1})^perp / h_{j-1/2} of the segment ending at node j,
/// 1 <= j <= N (j = N + 1 wraps for closed curves with N + 1 stored nodes).
Vec2 segment_normal(const PolygonalCurve& curve, std::size_t j);

/// Length-weighted node normal (X_{j+1} - X_{j-1})^perp / (h_{j-1/2} + h_{j+1/2}); at the ends
/// of open curves it is the adjacent segment normal.
Vec2 weighted_normal(const PolygonalCurve& curve, std::size_t j);

/// Unit tangent of the first or last segment of an open curve, oriented along the curve.
Vec2 endpoint_tangent(const PolygonalCurve& curve, CurveEnd which);

/// Second difference of `nodes` at j using `old_spacings` (segment k between nodes k and k+1)
/// for the quotient weights. Closed curves wrap; open curves require 1 <= j <= N - 1.
Vec2 discrete_laplacian(std::span<const Vec2> nodes, std::span<const double> old_spacings, std::size_t j,
                        bool closed);

/// Splits segments longer than h_max at their midpoints and removes interior nodes next to
/// segments shorter than h_min. When dropping a node would leave a segment longer than h_max,
/// the node is moved to the midpoint of its neighbors instead. Endpoints never move.
PolygonalCurve remesh(const PolygonalCurve& curve, double h_min, double h_max);

/// Pixel links cut by a network.
/// x-link (i, j), 1 <= i <= nx, 0 <= j <= ny, is [(i-1)h, ih] x {jh};
/// y-link (i, j), 0 <= i <= nx, 1 <= j <= ny, is {ih} x [(j-1)h, jh].
class LinkCrossings {
public:
    LinkCrossings() = default;
    explicit LinkCrossings(const Domain& domain);

    const Domain& domain() const noexcept { return domain_; }
    bool x_cut(std::size_t i, std::size_t j) const { return x_cut_[x_index(i, j)] != 0; }
    bool y_cut(std::size_t i, std::size_t j) const { return y_cut_[y_index(i, j)] != 0; }
    void mark_x(std::size_t i, std::size_t j) { x_cut_[x_index(i, j)] = 1; }
    void mark_y(std::size_t i, std::size_t j) { y_cut_[y_index(i, j)] = 1; }

    std::vector<GridPoint> x_links() const;
    std::vector<GridPoint> y_links() const;
    std::size_t count() const;

    friend bool operator==(const LinkCrossings&, const LinkCrossings&) = default;

private:
    std::size_t x_index(std::size_t i, std::size_t j) const { return j * domain_.nx + (i - 1); }
    std::size_t y_index(std::size_t i, std::size_t j) const { return (j - 1) * (domain_.nx + 1) + i; }

    Domain domain_;
    std::vector<unsigned char> x_cut_;
    std::vector<unsigned char> y_cut_;
};

/// Every pixel link met by a curve segment (inclusive at segment and link endpoints, so a
/// crossing through a grid node cuts the links on both sides of it).
LinkCrossings gridline_crossings(const CurveNetwork& network, const Domain& domain);
void add_crossings(LinkCrossings& links, const PolygonalCurve& curve);

// Snapshot text format: "curve <id> <start> <end> <count>" followed by <count> "x y" lines.
void write_curves(std::ostream& out, std::span<const PolygonalCurve> curves);
std::vector<PolygonalCurve> read_curves(std::istream& in);
void save_curves(const std::filesystem::path& path, std::span<const PolygonalCurve> curves);
std::vector<PolygonalCurve> load_curves(const std::filesystem::path& path);

// Seed generators.
PolygonalCurve make_segment(int id, Vec2 from, Vec2 to, double spacing, EndpointKind start = EndpointKind::Free,
                            EndpointKind end = EndpointKind::Free);
// Anticlockwise regular polygon with `count` nodes.
PolygonalCurve make_circle(int id, Vec2 center, double radius, std::size_t count);
// Short horizontal free segments on a regular lattice.
std::vector<PolygonalCurve> make_segment_grid(const Domain& domain, std::size_t per_row, std::size_t per_col,
                                              double segment_length, double spacing);

}  // namespace freeseg
