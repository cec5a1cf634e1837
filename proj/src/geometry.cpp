#include "freeseg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "freeseg/errors.hpp"

namespace freeseg {

bool is_boundary(EndpointKind kind) {
    return kind == EndpointKind::BoundaryLeft || kind == EndpointKind::BoundaryRight ||
           kind == EndpointKind::BoundaryBottom || kind == EndpointKind::BoundaryTop;
}

std::string_view to_string(EndpointKind kind) {
    switch (kind) {
        case EndpointKind::Closed: return "closed";
        case EndpointKind::Free: return "free";
        case EndpointKind::BoundaryLeft: return "boundary-left";
        case EndpointKind::BoundaryRight: return "boundary-right";
        case EndpointKind::BoundaryBottom: return "boundary-bottom";
        case EndpointKind::BoundaryTop: return "boundary-top";
    }
    return "free";
}

EndpointKind parse_endpoint_kind(std::string_view token) {
    for (auto k : {EndpointKind::Closed, EndpointKind::Free, EndpointKind::BoundaryLeft, EndpointKind::BoundaryRight,
                   EndpointKind::BoundaryBottom, EndpointKind::BoundaryTop}) {
        if (token == to_string(k)) {
            return k;
        }
    }
    throw FormatError("unknown endpoint kind '" + std::string(token) + "'");
}

const Vec2& PolygonalCurve::node(std::ptrdiff_t j) const {
    const auto n = static_cast<std::ptrdiff_t>(nodes.size());
    if (closed()) {
        j = ((j % n) + n) % n;
    }
    return nodes[static_cast<std::size_t>(j)];
}

const PolygonalCurve* CurveNetwork::find(int id) const {
    for (const auto& c : curves) {
        if (c.id == id) {
            return &c;
        }
    }
    return nullptr;
}

int CurveNetwork::next_id() const {
    int id = 0;
    for (const auto& c : curves) {
        id = std::max(id, c.id + 1);
    }
    return id;
}

namespace {

bool on_boundary_edge(EndpointKind kind, Vec2 p, const Domain& d) {
    switch (kind) {
        case EndpointKind::BoundaryLeft: return p.x == 0.0;
        case EndpointKind::BoundaryRight: return p.x == d.width();
        case EndpointKind::BoundaryBottom: return p.y == 0.0;
        case EndpointKind::BoundaryTop: return p.y == d.height();
        default: return true;
    }
}

}  // namespace

void validate(const PolygonalCurve& curve, const Domain& domain) {
    const std::string tag = "curve " + std::to_string(curve.id) + ": ";
    if ((curve.start == EndpointKind::Closed) != (curve.end == EndpointKind::Closed)) {
        throw GeometryError(tag + "closed on one end only");
    }
    if (curve.closed() ? curve.size() < 3 : curve.size() < 2) {
        throw GeometryError(tag + "too few nodes");
    }
    for (const Vec2& p : curve.nodes) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !domain.contains(p)) {
            throw GeometryError(tag + "node outside the image domain");
        }
    }
    for (std::size_t k = 0; k < curve.segment_count(); ++k) {
        if (curve.node(static_cast<std::ptrdiff_t>(k)) == curve.node(static_cast<std::ptrdiff_t>(k + 1))) {
            throw GeometryError(tag + "coincident consecutive nodes");
        }
    }
    if (!curve.closed()) {
        if (!on_boundary_edge(curve.start, curve.nodes.front(), domain) ||
            !on_boundary_edge(curve.end, curve.nodes.back(), domain)) {
            throw GeometryError(tag + "boundary endpoint not on its edge");
        }
    }
}

void validate(const CurveNetwork& network) {
    for (const auto& c : network.curves) {
        validate(c, network.domain);
    }
}

std::vector<double> segment_lengths(const PolygonalCurve& curve) {
    std::vector<double> h(curve.segment_count());
    for (std::size_t k = 0; k < h.size(); ++k) {
        h[k] = length(curve.node(static_cast<std::ptrdiff_t>(k + 1)) - curve.node(static_cast<std::ptrdiff_t>(k)));
    }
    return h;
}

double curve_length(const PolygonalCurve& curve) {
    double s = 0.0;
    for (double h : segment_lengths(curve)) {
        s += h;
    }
    return s;
}

double total_length(const CurveNetwork& network) {
    double s = 0.0;
    for (const auto& c : network.curves) {
        s += curve_length(c);
    }
    return s;
}

Vec2 segment_normal(const PolygonalCurve& curve, std::size_t j) {
    if (j < 1 || j > curve.segment_count()) {
        throw GeometryError("segment_normal: index out of range");
    }
    const Vec2 d = curve.node(static_cast<std::ptrdiff_t>(j)) - curve.node(static_cast<std::ptrdiff_t>(j) - 1);
    const double h = length(d);
    if (!(h > 0.0)) {
        throw GeometryError("segment_normal: degenerate segment");
    }
    return perp(d) / h;
}

Vec2 weighted_normal(const PolygonalCurve& curve, std::size_t j) {
    const std::size_t n = curve.size();
    if (!curve.closed()) {
        if (j == 0) {
            return segment_normal(curve, 1);
        }
        if (j == n - 1) {
            return segment_normal(curve, n - 1);
        }
        if (j >= n) {
            throw GeometryError("weighted_normal: index out of range");
        }
    } else if (j >= n) {
        throw GeometryError("weighted_normal: index out of range");
    }
    const auto jj = static_cast<std::ptrdiff_t>(j);
    const Vec2 prev = curve.node(jj - 1);
    const Vec2 here = curve.node(jj);
    const Vec2 next = curve.node(jj + 1);
    const double hm = length(here - prev);
    const double hp = length(next - here);
    if (!(hm > 0.0) || !(hp > 0.0)) {
        throw GeometryError("weighted_normal: degenerate spacing");
    }
    return perp(next - prev) / (hm + hp);
}

Vec2 endpoint_tangent(const PolygonalCurve& curve, CurveEnd which) {
    if (curve.closed()) {
        throw ParameterError("endpoint_tangent: closed curves have no endpoints");
    }
    const std::size_t n = curve.size();
    const Vec2 d = which == CurveEnd::Start ? curve.nodes[1] - curve.nodes[0] : curve.nodes[n - 1] - curve.nodes[n - 2];
    const double h = length(d);
    if (!(h > 0.0)) {
        throw GeometryError("endpoint_tangent: degenerate segment");
    }
    return d / h;
}

Vec2 discrete_laplacian(std::span<const Vec2> nodes, std::span<const double> old_spacings, std::size_t j,
                        bool closed) {
    const std::size_t n = nodes.size();
    std::size_t prev = 0;
    std::size_t next = 0;
    double hm = 0.0;
    double hp = 0.0;
    if (closed) {
        if (j >= n || old_spacings.size() != n) {
            throw GeometryError("discrete_laplacian: index or spacing count out of range");
        }
        prev = (j + n - 1) % n;
        next = (j + 1) % n;
        hm = old_spacings[prev];
        hp = old_spacings[j];
    } else {
        if (j < 1 || j + 1 >= n || old_spacings.size() != n - 1) {
            throw GeometryError("discrete_laplacian: needs an interior node of an open curve");
        }
        prev = j - 1;
        next = j + 1;
        hm = old_spacings[j - 1];
        hp = old_spacings[j];
    }
    if (!(hm > 0.0) || !(hp > 0.0)) {
        throw GeometryError("discrete_laplacian: degenerate spacing");
    }
    return (2.0 / (hm + hp)) * ((nodes[next] - nodes[j]) / hp - (nodes[j] - nodes[prev]) / hm);
}

namespace {

// Removable: interior node of an open curve, or any node of a closed curve above 3 nodes.
bool removable(const std::vector<Vec2>& nodes, bool closed, std::size_t k) {
    if (closed) {
        return nodes.size() > 3;
    }
    return k > 0 && k + 1 < nodes.size();
}

}  // namespace

PolygonalCurve remesh(const PolygonalCurve& curve, double h_min, double h_max) {
    if (!(h_min > 0.0) || !(h_max > h_min)) {
        throw ParameterError("remesh: need 0 < h_min < h_max");
    }
    PolygonalCurve out = curve;
    auto& p = out.nodes;
    const bool closed = out.closed();
    const auto seg_count = [&] { return closed ? p.size() : p.size() - 1; };
    const auto seg_len = [&](std::size_t k) { return length(p[(k + 1) % p.size()] - p[k]); };

    // Split long segments until all fit.
    for (std::size_t k = 0; k < seg_count();) {
        if (seg_len(k) > h_max) {
            const Vec2 mid = 0.5 * (p[k] + p[(k + 1) % p.size()]);
            p.insert(p.begin() + static_cast<std::ptrdiff_t>(k + 1), mid);
        } else {
            ++k;
        }
    }

    // Remove or relocate nodes next to short segments.
    std::size_t guard = 4 * p.size() + 16;
    for (std::size_t k = 0; k < seg_count() && guard > 0;) {
        if (seg_len(k) >= h_min) {
            ++k;
            continue;
        }
        --guard;
        const std::size_t n = p.size();
        const std::size_t a = k;
        const std::size_t b = (k + 1) % n;
        const bool can_a = removable(p, closed, a);
        const bool can_b = removable(p, closed, b);
        if (!can_a && !can_b) {
            ++k;
            continue;
        }
        // Merged segment length if the node is dropped.
        const auto merged = [&](std::size_t m) { return length(p[(m + 1) % n] - p[(m + n - 1) % n]); };
        std::size_t victim = 0;
        if (can_a && can_b) {
            victim = merged(a) <= merged(b) ? a : b;
        } else {
            victim = can_a ? a : b;
        }
        const Vec2 left = p[(victim + n - 1) % n];
        const Vec2 right = p[(victim + 1) % n];
        const double m = length(right - left);
        if (m > h_max) {
            if (0.5 * m < h_min) {
                ++k;
                continue;
            }
            p[victim] = 0.5 * (left + right);
        } else {
            p.erase(p.begin() + static_cast<std::ptrdiff_t>(victim));
        }
        // Revisit from the segment before the change.
        k = victim > 0 ? std::min(victim - 1, seg_count() - 1) : 0;
    }
    return out;
}

LinkCrossings::LinkCrossings(const Domain& domain)
    : domain_(domain), x_cut_(domain.nx * (domain.ny + 1), 0), y_cut_((domain.nx + 1) * domain.ny, 0) {}

std::vector<GridPoint> LinkCrossings::x_links() const {
    std::vector<GridPoint> out;
    for (std::size_t j = 0; j <= domain_.ny; ++j) {
        for (std::size_t i = 1; i <= domain_.nx; ++i) {
            if (x_cut(i, j)) {
                out.push_back({i, j});
            }
        }
    }
    return out;
}

std::vector<GridPoint> LinkCrossings::y_links() const {
    std::vector<GridPoint> out;
    for (std::size_t j = 1; j <= domain_.ny; ++j) {
        for (std::size_t i = 0; i <= domain_.nx; ++i) {
            if (y_cut(i, j)) {
                out.push_back({i, j});
            }
        }
    }
    return out;
}

std::size_t LinkCrossings::count() const {
    return static_cast<std::size_t>(std::count(x_cut_.begin(), x_cut_.end(), 1) +
                                    std::count(y_cut_.begin(), y_cut_.end(), 1));
}

namespace {

// Link indices k with [(k-1)h, kh] meeting [lo, hi], clipped to 1..count.
void mark_range(double lo, double hi, double h, std::size_t count, auto&& mark) {
    const double first = std::ceil(lo / h);
    const double last = std::floor(hi / h) + 1.0;
    const double k0 = std::max(first, 1.0);
    const double k1 = std::min(last, static_cast<double>(count));
    for (double k = k0; k <= k1; k += 1.0) {
        mark(static_cast<std::size_t>(k));
    }
}

void add_segment(LinkCrossings& links, Vec2 p, Vec2 q) {
    const Domain& d = links.domain();
    const double h = d.h;
    // Horizontal grid lines y = j h cut x-links.
    {
        const double lo = std::min(p.y, q.y);
        const double hi = std::max(p.y, q.y);
        const double j0 = std::max(std::ceil(lo / h), 0.0);
        const double j1 = std::min(std::floor(hi / h), static_cast<double>(d.ny));
        for (double jf = j0; jf <= j1; jf += 1.0) {
            const auto j = static_cast<std::size_t>(jf);
            const double y = jf * h;
            double xlo = 0.0;
            double xhi = 0.0;
            if (p.y == q.y) {
                xlo = std::min(p.x, q.x);
                xhi = std::max(p.x, q.x);
            } else {
                const double x = p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y);
                xlo = xhi = x;
            }
            mark_range(xlo, xhi, h, d.nx, [&](std::size_t i) { links.mark_x(i, j); });
        }
    }
    // Vertical grid lines x = i h cut y-links.
    {
        const double lo = std::min(p.x, q.x);
        const double hi = std::max(p.x, q.x);
        const double i0 = std::max(std::ceil(lo / h), 0.0);
        const double i1 = std::min(std::floor(hi / h), static_cast<double>(d.nx));
        for (double fi = i0; fi <= i1; fi += 1.0) {
            const auto i = static_cast<std::size_t>(fi);
            const double x = fi * h;
            double ylo = 0.0;
            double yhi = 0.0;
            if (p.x == q.x) {
                ylo = std::min(p.y, q.y);
                yhi = std::max(p.y, q.y);
            } else {
                const double y = p.y + (x - p.x) * (q.y - p.y) / (q.x - p.x);
                ylo = yhi = y;
            }
            mark_range(ylo, yhi, h, d.ny, [&](std::size_t j) { links.mark_y(i, j); });
        }
    }
}

}  // namespace

void add_crossings(LinkCrossings& links, const PolygonalCurve& curve) {
    for (std::size_t k = 0; k < curve.segment_count(); ++k) {
        add_segment(links, curve.node(static_cast<std::ptrdiff_t>(k)), curve.node(static_cast<std::ptrdiff_t>(k + 1)));
    }
}

LinkCrossings gridline_crossings(const CurveNetwork& network, const Domain& domain) {
    LinkCrossings links(domain);
    for (const auto& c : network.curves) {
        add_crossings(links, c);
    }
    return links;
}

void write_curves(std::ostream& out, std::span<const PolygonalCurve> curves) {
    char buf[96];
    for (const auto& c : curves) {
        out << "curve " << c.id << ' ' << to_string(c.start) << ' ' << to_string(c.end) << ' ' << c.nodes.size()
            << '\n';
        for (const Vec2& p : c.nodes) {
            std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
            out << buf;
        }
    }
}

std::vector<PolygonalCurve> read_curves(std::istream& in) {
    std::vector<PolygonalCurve> curves;
    std::string line;
    std::size_t line_no = 0;
    const auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') {
                continue;
            }
            return true;
        }
        return false;
    };
    const auto fail = [&](const std::string& msg) {
        throw FormatError("curves line " + std::to_string(line_no) + ": " + msg);
    };
    while (next_line()) {
        std::istringstream header(line);
        std::string word;
        std::string start;
        std::string end;
        PolygonalCurve c;
        long long count = 0;
        if (!(header >> word >> c.id >> start >> end >> count) || word != "curve" || count < 1) {
            fail("expected 'curve <id> <start> <end> <count>'");
        }
        c.start = parse_endpoint_kind(start);
        c.end = parse_endpoint_kind(end);
        c.nodes.reserve(static_cast<std::size_t>(count));
        for (long long k = 0; k < count; ++k) {
            if (!next_line()) {
                fail("truncated node list");
            }
            std::istringstream row(line);
            Vec2 p;
            if (!(row >> p.x >> p.y)) {
                fail("expected 'x y'");
            }
            c.nodes.push_back(p);
        }
        curves.push_back(std::move(c));
    }
    return curves;
}

void save_curves(const std::filesystem::path& path, std::span<const PolygonalCurve> curves) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    write_curves(out, curves);
}

std::vector<PolygonalCurve> load_curves(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return read_curves(in);
}

PolygonalCurve make_segment(int id, Vec2 from, Vec2 to, double spacing, EndpointKind start, EndpointKind end) {
    if (!(spacing > 0.0)) {
        throw ParameterError("make_segment: spacing must be positive");
    }
    const double len = length(to - from);
    const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spacing - 1e-9)));
    PolygonalCurve c;
    c.id = id;
    c.start = start;
    c.end = end;
    for (std::size_t k = 0; k <= pieces; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(pieces);
        c.nodes.push_back(k == pieces ? to : from + t * (to - from));
    }
    return c;
}

PolygonalCurve make_circle(int id, Vec2 center, double radius, std::size_t count) {
    if (count < 3 || !(radius > 0.0)) {
        throw ParameterError("make_circle: need count >= 3 and radius > 0");
    }
    PolygonalCurve c;
    c.id = id;
    c.start = c.end = EndpointKind::Closed;
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (std::size_t k = 0; k < count; ++k) {
        const double phi = two_pi * static_cast<double>(k) / static_cast<double>(count);
        c.nodes.push_back({center.x + radius * std::cos(phi), center.y + radius * std::sin(phi)});
    }
    return c;
}

std::vector<PolygonalCurve> make_segment_grid(const Domain& domain, std::size_t per_row, std::size_t per_col,
                                              double segment_length, double spacing) {
    std::vector<PolygonalCurve> out;
    const double dx = domain.width() / static_cast<double>(per_row);
    const double dy = domain.height() / static_cast<double>(per_col);
    int id = 0;
    for (std::size_t r = 0; r < per_col; ++r) {
        for (std::size_t c = 0; c < per_row; ++c) {
            const Vec2 mid{(static_cast<double>(c) + 0.5) * dx, (static_cast<double>(r) + 0.5) * dy};
            const Vec2 half{0.5 * segment_length, 0.0};
            out.push_back(make_segment(id++, mid - half, mid + half, spacing));
        }
    }
    return out;
}

}  // namespace freeseg
