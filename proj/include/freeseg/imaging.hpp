#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace freeseg {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
    Vec2& operator+=(Vec2 b) {
        x += b.x;
        y += b.y;
        return *this;
    }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
// Anticlockwise rotation by pi/2.
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }
double length(Vec2 a);

struct GridPoint {
    std::size_t i = 0;
    std::size_t j = 0;
    friend bool operator==(GridPoint, GridPoint) = default;
};

/// Grid extent: nodes (i, j) for i in 0..nx, j in 0..ny at physical position (i*h, j*h).
/// nx and ny count pixel links, so the node array is (nx + 1) x (ny + 1).
struct Domain {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double h = 1.0;

    double width() const { return static_cast<double>(nx) * h; }
    double height() const { return static_cast<double>(ny) * h; }
    bool contains(Vec2 p) const { return p.x >= 0.0 && p.y >= 0.0 && p.x <= width() && p.y <= height(); }
    Vec2 clamp(Vec2 p) const;
    friend bool operator==(const Domain&, const Domain&) = default;
};

/// Scalar field on the nodes of a uniform grid. Intensity images keep values in [0, 1];
/// the type itself does not enforce it so that derived fields (ramps, differences) fit too.
class GridImage {
public:
    GridImage() = default;
    GridImage(Domain domain, double fill = 0.0);
    GridImage(Domain domain, std::vector<double> values);

    const Domain& domain() const noexcept { return domain_; }
    std::size_t nx() const noexcept { return domain_.nx; }
    std::size_t ny() const noexcept { return domain_.ny; }
    double h() const noexcept { return domain_.h; }
    std::size_t node_count() const noexcept { return values_.size(); }

    std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * (domain_.nx + 1) + i; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[index(i, j)]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return values_[index(i, j)]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool in_unit_range() const;

    friend bool operator==(const GridImage&, const GridImage&) = default;

private:
    Domain domain_;
    std::vector<double> values_ = std::vector<double>(1, 0.0);
};

/// Reads a binary (P5) or plain (P2) PGM with maxval up to 65535. A W x H file becomes a grid
/// with nx = W - 1, ny = H - 1 and h = 1; file row r holds nodes j = r. Throws FormatError.
GridImage load_pgm(const std::filesystem::path& path);
/// Writes P5 at maxval 255, clamping to [0, 1] and rounding half up.
void save_pgm(const GridImage& img, const std::filesystem::path& path);

struct CrackTipParams {
    Vec2 center;
    double amplitude = 0.0;  // a
    double offset = 0.5;     // b
};

/// Constants of the crack-tip image a*sqrt(r)*sin(theta/2) + b about the grid center, with
/// theta in (-pi, pi] so the jump lies on the ray left of center. a is chosen so that the
/// node values span exactly [0, 1] and b = 0.5.
CrackTipParams crack_tip_params(std::size_t nx, std::size_t ny, double h = 1.0);
double crack_tip_value(const CrackTipParams& params, Vec2 p);
GridImage generate_crack_tip(std::size_t nx, std::size_t ny, double h = 1.0);

struct DiskRegion {
    Vec2 center;
    double radius = 0.0;  // inside: |p - center| < radius
};
struct HalfPlaneRegion {
    double x0 = 0.0;  // inside: x < x0
};
// Horizontal finger entering from the left boundary and ending inside the image.
struct StripeRegion {
    double y_center = 0.0;
    double half_width = 0.0;
    double x_stop = 0.0;  // inside: x <= x_stop and |y - y_center| <= half_width
};
using RegionShape = std::variant<DiskRegion, HalfPlaneRegion, StripeRegion>;

struct TwoRegionSpec {
    RegionShape shape;
    double inside = 1.0;
    double outside = 0.0;
};

bool region_contains(const RegionShape& shape, Vec2 p);
/// Throws ParameterError for intensities outside [0, 1].
GridImage generate_two_region(std::size_t nx, std::size_t ny, const TwoRegionSpec& spec, double h = 1.0);

/// Uniform noise in [-amplitude, amplitude], clamped to [0, 1]. Reproducible from the seed on
/// every platform (the uniform draw does not go through std:: distributions).
GridImage add_noise(const GridImage& img, double amplitude, std::uint64_t seed);

/// Bilinear interpolation; points outside the domain are clamped onto it first.
double sample_bilinear(const GridImage& img, Vec2 p);

/// (u(z + h e_axis) - u(z)) / h for axis 1 (x) or 2 (y). Throws std::out_of_range when the
/// neighbor is outside the grid.
double forward_diff(const GridImage& img, GridPoint z, int axis);

}  // namespace freeseg
