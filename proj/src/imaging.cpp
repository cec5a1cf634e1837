#include "freeseg/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "freeseg/errors.hpp"

namespace freeseg {

double length(Vec2 a) { return std::hypot(a.x, a.y); }

Vec2 Domain::clamp(Vec2 p) const {
    return {std::clamp(p.x, 0.0, width()), std::clamp(p.y, 0.0, height())};
}

GridImage::GridImage(Domain domain, double fill)
    : domain_(domain), values_((domain.nx + 1) * (domain.ny + 1), fill) {
    if (!(domain.h > 0.0)) {
        throw ParameterError("grid spacing must be positive");
    }
}

GridImage::GridImage(Domain domain, std::vector<double> values) : domain_(domain), values_(std::move(values)) {
    if (!(domain.h > 0.0)) {
        throw ParameterError("grid spacing must be positive");
    }
    if (values_.size() != (domain.nx + 1) * (domain.ny + 1)) {
        throw ParameterError("grid value count does not match its dimensions");
    }
}

bool GridImage::in_unit_range() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

namespace {

class PgmReader {
public:
    explicit PgmReader(std::string data) : data_(std::move(data)) {}

    std::string magic() {
        if (data_.size() < 2) {
            throw FormatError("pgm: file too short");
        }
        pos_ = 2;
        return data_.substr(0, 2);
    }

    std::uint64_t header_number() {
        skip_space_and_comments();
        if (pos_ >= data_.size() || !std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
            throw FormatError("pgm: malformed header");
        }
        std::uint64_t v = 0;
        while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
            v = v * 10 + static_cast<std::uint64_t>(data_[pos_] - '0');
            if (v > (1ULL << 32)) {
                throw FormatError("pgm: header value overflow");
            }
            ++pos_;
        }
        return v;
    }

    // Exactly one whitespace byte separates the header from binary data.
    void end_of_header() {
        if (pos_ >= data_.size() || !std::isspace(static_cast<unsigned char>(data_[pos_]))) {
            throw FormatError("pgm: missing whitespace after header");
        }
        ++pos_;
    }

    std::uint32_t plain_sample() {
        skip_space_and_comments();
        if (pos_ >= data_.size()) {
            throw FormatError("pgm: truncated pixel data");
        }
        return static_cast<std::uint32_t>(header_number());
    }

    std::uint32_t binary_sample(bool wide) {
        const std::size_t need = wide ? 2 : 1;
        if (pos_ + need > data_.size()) {
            throw FormatError("pgm: truncated pixel data");
        }
        std::uint32_t v = static_cast<unsigned char>(data_[pos_]);
        if (wide) {
            v = (v << 8) | static_cast<unsigned char>(data_[pos_ + 1]);
        }
        pos_ += need;
        return v;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < data_.size()) {
            const char c = data_[pos_];
            if (c == '#') {
                while (pos_ < data_.size() && data_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string data_;
    std::size_t pos_ = 0;
};

}  // namespace

GridImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("pgm: cannot open " + path.string());
    }
    PgmReader reader{std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>())};
    const std::string magic = reader.magic();
    if (magic != "P2" && magic != "P5") {
        throw FormatError("pgm: unsupported magic " + magic);
    }
    const std::uint64_t w = reader.header_number();
    const std::uint64_t hgt = reader.header_number();
    const std::uint64_t maxval = reader.header_number();
    if (w == 0 || hgt == 0) {
        throw FormatError("pgm: empty image");
    }
    if (w * hgt > (1ULL << 28)) {
        throw FormatError("pgm: image dimensions too large");
    }
    if (maxval == 0 || maxval > 65535) {
        throw FormatError("pgm: maxval must be in 1..65535");
    }
    const Domain domain{static_cast<std::size_t>(w - 1), static_cast<std::size_t>(hgt - 1), 1.0};
    std::vector<double> values(static_cast<std::size_t>(w * hgt));
    const bool binary = magic == "P5";
    if (binary) {
        reader.end_of_header();
    }
    for (double& v : values) {
        const std::uint32_t s = binary ? reader.binary_sample(maxval > 255) : reader.plain_sample();
        if (s > maxval) {
            throw FormatError("pgm: sample exceeds maxval");
        }
        v = static_cast<double>(s) / static_cast<double>(maxval);
    }
    return GridImage(domain, std::move(values));
}

void save_pgm(const GridImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("pgm: cannot write " + path.string());
    }
    out << "P5\n" << img.nx() + 1 << ' ' << img.ny() + 1 << "\n255\n";
    std::string bytes;
    bytes.reserve(img.node_count());
    for (double v : img.values()) {
        const double scaled = std::clamp(v, 0.0, 1.0) * 255.0;
        bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::floor(scaled + 0.5))));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw FormatError("pgm: write failed for " + path.string());
    }
}

namespace {

double crack_shape(Vec2 center, Vec2 p) {
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    const double r = std::hypot(dx, dy);
    if (r == 0.0) {
        return 0.0;
    }
    // atan2 gives +pi for dy == +0 and dx < 0, so the left ray takes theta = pi.
    const double theta = std::atan2(dy, dx);
    return std::sqrt(r) * std::sin(theta / 2.0);
}

}  // namespace

CrackTipParams crack_tip_params(std::size_t nx, std::size_t ny, double h) {
    if (nx < 3 || ny < 3) {
        throw ParameterError("crack-tip image needs at least 3 x 3 pixels");
    }
    CrackTipParams params;
    params.center = {0.5 * static_cast<double>(nx) * h, 0.5 * static_cast<double>(ny) * h};
    double peak = 0.0;
    for (std::size_t j = 0; j <= ny; ++j) {
        for (std::size_t i = 0; i <= nx; ++i) {
            const Vec2 p{static_cast<double>(i) * h, static_cast<double>(j) * h};
            peak = std::max(peak, std::abs(crack_shape(params.center, p)));
        }
    }
    params.amplitude = 0.5 / peak;
    params.offset = 0.5;
    return params;
}

double crack_tip_value(const CrackTipParams& params, Vec2 p) {
    return params.amplitude * crack_shape(params.center, p) + params.offset;
}

GridImage generate_crack_tip(std::size_t nx, std::size_t ny, double h) {
    const CrackTipParams params = crack_tip_params(nx, ny, h);
    GridImage img(Domain{nx, ny, h});
    for (std::size_t j = 0; j <= ny; ++j) {
        for (std::size_t i = 0; i <= nx; ++i) {
            const double v = crack_tip_value(params, {static_cast<double>(i) * h, static_cast<double>(j) * h});
            // The extreme nodes land on 0 and 1 up to rounding.
            img(i, j) = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

bool region_contains(const RegionShape& shape, Vec2 p) {
    struct Visitor {
        Vec2 p;
        bool operator()(const DiskRegion& d) const { return length(p - d.center) < d.radius; }
        bool operator()(const HalfPlaneRegion& hp) const { return p.x < hp.x0; }
        bool operator()(const StripeRegion& s) const {
            return p.x <= s.x_stop && std::abs(p.y - s.y_center) <= s.half_width;
        }
    };
    return std::visit(Visitor{p}, shape);
}

GridImage generate_two_region(std::size_t nx, std::size_t ny, const TwoRegionSpec& spec, double h) {
    const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(spec.inside) || !unit(spec.outside)) {
        throw ParameterError("two-region intensities must lie in [0, 1]");
    }
    GridImage img(Domain{nx, ny, h});
    for (std::size_t j = 0; j <= ny; ++j) {
        for (std::size_t i = 0; i <= nx; ++i) {
            const Vec2 p{static_cast<double>(i) * h, static_cast<double>(j) * h};
            img(i, j) = region_contains(spec.shape, p) ? spec.inside : spec.outside;
        }
    }
    return img;
}

GridImage add_noise(const GridImage& img, double amplitude, std::uint64_t seed) {
    if (!(amplitude >= 0.0)) {
        throw ParameterError("noise amplitude must be non-negative");
    }
    GridImage out = img;
    if (amplitude == 0.0) {
        return out;
    }
    std::mt19937_64 rng(seed);
    for (double& v : out.values()) {
        const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
        v = std::clamp(v + amplitude * (2.0 * unit - 1.0), 0.0, 1.0);
    }
    return out;
}

double sample_bilinear(const GridImage& img, Vec2 p) {
    const Domain& d = img.domain();
    const Vec2 q = d.clamp(p);
    const double fx = q.x / d.h;
    const double fy = q.y / d.h;
    const std::size_t i0 = d.nx == 0 ? 0 : std::min(static_cast<std::size_t>(fx), d.nx - 1);
    const std::size_t j0 = d.ny == 0 ? 0 : std::min(static_cast<std::size_t>(fy), d.ny - 1);
    const double tx = d.nx == 0 ? 0.0 : fx - static_cast<double>(i0);
    const double ty = d.ny == 0 ? 0.0 : fy - static_cast<double>(j0);
    const std::size_t i1 = d.nx == 0 ? 0 : i0 + 1;
    const std::size_t j1 = d.ny == 0 ? 0 : j0 + 1;
    const double v00 = img(i0, j0);
    const double v10 = img(i1, j0);
    const double v01 = img(i0, j1);
    const double v11 = img(i1, j1);
    return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11);
}

double forward_diff(const GridImage& img, GridPoint z, int axis) {
    if (axis != 1 && axis != 2) {
        throw std::out_of_range("forward_diff: axis must be 1 or 2");
    }
    const std::size_t i1 = axis == 1 ? z.i + 1 : z.i;
    const std::size_t j1 = axis == 2 ? z.j + 1 : z.j;
    if (z.i > img.nx() || z.j > img.ny() || i1 > img.nx() || j1 > img.ny()) {
        throw std::out_of_range("forward_diff: neighbor outside the grid");
    }
    return (img(i1, j1) - img(z.i, z.j)) / img.h();
}

}  // namespace freeseg
