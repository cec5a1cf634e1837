#include "freeseg/topology.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>

#include "freeseg/errors.hpp"

namespace freeseg {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::CurveDelete: return "curve-delete";
        case EventKind::FreeEndsClose: return "free-ends-close";
        case EventKind::FreeEndsMerge: return "free-ends-merge";
        case EventKind::TripleJunction: return "triple-junction";
        case EventKind::Split: return "split";
        case EventKind::CurvePairMerge: return "curve-pair-merge";
        case EventKind::BoundaryAttach: return "boundary-attach";
    }
    return "unknown";
}

std::string format_event(std::size_t step, const TopologyEvent& event) {
    std::string line = "event " + std::to_string(step) + " " + std::string(to_string(event.kind));
    std::vector<int> ids;
    for (const NodeRef& r : event.participants) {
        if (std::find(ids.begin(), ids.end(), r.curve) == ids.end()) {
            ids.push_back(r.curve);
        }
    }
    for (int id : ids) {
        line += " " + std::to_string(id);
    }
    return line;
}

namespace {

enum class Role { Interior, FreeEnd, Skip };

Role role_of(const PolygonalCurve& c, std::size_t k) {
    if (c.closed()) {
        return Role::Interior;
    }
    const bool first = k == 0;
    const bool last = k + 1 == c.size();
    if (!first && !last) {
        return Role::Interior;
    }
    const CurveEnd which = first ? CurveEnd::Start : CurveEnd::End;
    if (c.is_free(which) && !c.is_frozen(which)) {
        return Role::FreeEnd;
    }
    return Role::Skip;
}

struct Candidate {
    TopologyEvent event;
    double distance = 0.0;
    int priority = 0;
};

// Shorter arc length along one curve between nodes a and b, from prefix sums of segment lengths.
double arc_between(const PolygonalCurve& c, const std::vector<double>& prefix, std::size_t a, std::size_t b) {
    const double d = std::abs(prefix[b] - prefix[a]);
    if (c.closed()) {
        return std::min(d, prefix.back() - d);
    }
    return d;
}

std::size_t index_distance(const PolygonalCurve& c, std::size_t a, std::size_t b) {
    const std::size_t d = a > b ? a - b : b - a;
    return c.closed() ? std::min(d, c.size() - d) : d;
}

}  // namespace

std::vector<TopologyEvent> detect(const CurveNetwork& network, const TopologyParams& params) {
    if (!(params.cell_size > 0.0)) {
        throw ParameterError("detect: cell size must be positive");
    }
    const double c = params.cell_size;
    const Domain& d = network.domain;
    const auto cells_x = static_cast<std::size_t>(std::floor(d.width() / c)) + 1;
    const auto cells_y = static_cast<std::size_t>(std::floor(d.height() / c)) + 1;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> cells(cells_x * cells_y);
    std::vector<std::vector<double>> prefix(network.curves.size());

    for (std::size_t ci = 0; ci < network.curves.size(); ++ci) {
        const auto& curve = network.curves[ci];
        auto& pre = prefix[ci];
        pre.assign(1, 0.0);
        for (double s : segment_lengths(curve)) {
            pre.push_back(pre.back() + s);
        }
        for (std::size_t k = 0; k < curve.size(); ++k) {
            if (role_of(curve, k) == Role::Skip) {
                continue;
            }
            const Vec2 p = d.clamp(curve.nodes[k]);
            const auto cx = std::min(static_cast<std::size_t>(p.x / c), cells_x - 1);
            const auto cy = std::min(static_cast<std::size_t>(p.y / c), cells_y - 1);
            cells[cy * cells_x + cx].emplace_back(ci, k);
        }
    }

    // Best candidate per key (kind + curves + participating free ends).
    std::map<std::vector<long long>, Candidate> best;
    const auto better = [](const Candidate& a, const Candidate& b) {
        return std::tie(a.priority, a.distance, a.event) < std::tie(b.priority, b.distance, b.event);
    };
    for (const auto& cell : cells) {
        std::optional<Candidate> pick;
        for (std::size_t x = 0; x < cell.size(); ++x) {
            for (std::size_t y = x + 1; y < cell.size(); ++y) {
                auto [ca, ka] = cell[x];
                auto [cb, kb] = cell[y];
                const auto& A = network.curves[ca];
                const auto& B = network.curves[cb];
                if (ca == cb) {
                    if (index_distance(A, ka, kb) <= 2 || arc_between(A, prefix[ca], ka, kb) < 2.0 * c) {
                        continue;
                    }
                }
                Role ra = role_of(A, ka);
                Role rb = role_of(B, kb);
                Candidate cand;
                NodeRef na{A.id, ka};
                NodeRef nb{B.id, kb};
                if (ra == Role::FreeEnd && rb == Role::FreeEnd) {
                    cand.event.kind = ca == cb ? EventKind::FreeEndsClose : EventKind::FreeEndsMerge;
                    cand.priority = 0;
                    cand.event.participants = {std::min(na, nb), std::max(na, nb)};
                } else if (ra == Role::FreeEnd || rb == Role::FreeEnd) {
                    cand.event.kind = EventKind::TripleJunction;
                    cand.priority = 1;
                    cand.event.participants = ra == Role::FreeEnd ? std::vector{na, nb} : std::vector{nb, na};
                } else {
                    cand.event.kind = ca == cb ? EventKind::Split : EventKind::CurvePairMerge;
                    cand.priority = 2;
                    cand.event.participants = {std::min(na, nb), std::max(na, nb)};
                }
                cand.distance = length(A.nodes[ka] - B.nodes[kb]);
                if (!pick || better(cand, *pick)) {
                    pick = cand;
                }
            }
        }
        if (!pick) {
            continue;
        }
        std::vector<long long> key{static_cast<long long>(pick->event.kind)};
        for (const NodeRef& r : pick->event.participants) {
            const auto& curve = *network.find(r.curve);
            key.push_back(r.curve);
            key.push_back(role_of(curve, r.node) == Role::FreeEnd ? static_cast<long long>(r.node) : -1);
        }
        if (pick->event.kind == EventKind::Split || pick->event.kind == EventKind::CurvePairMerge) {
            std::sort(key.begin() + 1, key.end());
        }
        auto it = best.find(key);
        if (it == best.end() || better(*pick, it->second)) {
            best[key] = *pick;
        }
    }

    std::vector<TopologyEvent> events;
    for (auto& [key, cand] : best) {
        events.push_back(std::move(cand.event));
    }
    for (const auto& curve : network.curves) {
        if (curve.size() < params.min_nodes || curve_length(curve) < params.min_length) {
            events.push_back({EventKind::CurveDelete, {{curve.id, 0}}});
            continue;
        }
        if (curve.closed()) {
            continue;
        }
        for (std::size_t k : {std::size_t{0}, curve.size() - 1}) {
            if (role_of(curve, k) != Role::FreeEnd) {
                continue;
            }
            const Vec2 p = curve.nodes[k];
            const double gap = std::min({p.x, d.width() - p.x, p.y, d.height() - p.y});
            if (gap < c) {
                events.push_back({EventKind::BoundaryAttach, {{curve.id, k}}});
            }
        }
    }
    std::sort(events.begin(), events.end());
    return events;
}

namespace {

using Nodes = std::vector<Vec2>;

// Copies nodes first..last of c along increasing index, wrapping for closed curves.
Nodes run(const PolygonalCurve& c, std::size_t first, std::size_t last) {
    Nodes out;
    const std::size_t n = c.size();
    for (std::size_t k = first;; k = (k + 1) % n) {
        out.push_back(c.nodes[k]);
        if (k == last) {
            break;
        }
    }
    return out;
}

void drop_repeats(Nodes& nodes, bool closed) {
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    while (closed && nodes.size() > 1 && nodes.front() == nodes.back()) {
        nodes.pop_back();
    }
}

PolygonalCurve make_curve(int id, Nodes nodes, EndpointKind start, EndpointKind end) {
    PolygonalCurve c;
    c.id = id;
    c.start = start;
    c.end = end;
    drop_repeats(nodes, start == EndpointKind::Closed);
    c.nodes = std::move(nodes);
    return c;
}

bool viable(const PolygonalCurve& c) { return c.closed() ? c.size() >= 3 : c.size() >= 2; }

std::size_t position_of(const CurveNetwork& net, int id) {
    for (std::size_t i = 0; i < net.curves.size(); ++i) {
        if (net.curves[i].id == id) {
            return i;
        }
    }
    throw TopologyError("event refers to missing curve " + std::to_string(id));
}

void require_node(const PolygonalCurve& c, std::size_t k) {
    if (k >= c.size()) {
        throw TopologyError("event refers to missing node " + std::to_string(k) + " of curve " +
                            std::to_string(c.id));
    }
}

CurveEnd end_at(const PolygonalCurve& c, std::size_t k) {
    if (c.closed() || (k != 0 && k + 1 != c.size())) {
        throw TopologyError("node " + std::to_string(k) + " of curve " + std::to_string(c.id) + " is not an endpoint");
    }
    return k == 0 ? CurveEnd::Start : CurveEnd::End;
}

void require_interior(const PolygonalCurve& c, std::size_t k) {
    require_node(c, k);
    if (!c.closed() && (k == 0 || k + 1 == c.size())) {
        throw TopologyError("node " + std::to_string(k) + " of curve " + std::to_string(c.id) + " is an endpoint");
    }
}

// Replaces the curve at `pos` by `pieces` (keeping the order) and drops unusable pieces.
void replace(CurveNetwork& net, std::size_t pos, std::vector<PolygonalCurve> pieces) {
    net.curves.erase(net.curves.begin() + static_cast<std::ptrdiff_t>(pos));
    std::vector<PolygonalCurve> kept;
    for (auto& p : pieces) {
        if (viable(p)) {
            kept.push_back(std::move(p));
        }
    }
    net.curves.insert(net.curves.begin() + static_cast<std::ptrdiff_t>(pos), kept.begin(), kept.end());
}

PolygonalCurve close_ends(const PolygonalCurve& c) {
    if (!c.is_free(CurveEnd::Start) || !c.is_free(CurveEnd::End)) {
        throw TopologyError("free-ends-close needs two free ends");
    }
    if (c.size() < 4) {
        throw TopologyError("free-ends-close needs at least four nodes");
    }
    Nodes nodes{0.5 * (c.nodes.front() + c.nodes.back())};
    nodes.insert(nodes.end(), c.nodes.begin() + 1, c.nodes.end() - 1);
    return make_curve(c.id, std::move(nodes), EndpointKind::Closed, EndpointKind::Closed);
}

// A's free end meets B's free end; the joined curve runs through A then B.
PolygonalCurve merge_ends(const PolygonalCurve& a, CurveEnd ea, const PolygonalCurve& b, CurveEnd eb) {
    if (!a.is_free(ea) || !b.is_free(eb)) {
        throw TopologyError("free-ends-merge needs two free ends");
    }
    Nodes na = a.nodes;
    EndpointKind a_outer = a.end;
    if (ea == CurveEnd::Start) {
        std::reverse(na.begin(), na.end());
        a_outer = a.end;
    } else {
        a_outer = a.start;
    }
    Nodes nb = b.nodes;
    EndpointKind b_outer = b.end;
    if (eb == CurveEnd::End) {
        std::reverse(nb.begin(), nb.end());
        b_outer = b.start;
    }
    const Vec2 mid = 0.5 * (na.back() + nb.front());
    na.back() = mid;
    na.insert(na.end(), nb.begin() + 1, nb.end());
    return make_curve(a.id, std::move(na), a_outer, b_outer);
}

EndpointKind nearest_edge(Vec2 p, const Domain& d, Vec2& snapped) {
    const double gaps[4] = {p.x, d.width() - p.x, p.y, d.height() - p.y};
    const std::size_t best = static_cast<std::size_t>(std::min_element(gaps, gaps + 4) - gaps);
    snapped = d.clamp(p);
    switch (best) {
        case 0: snapped.x = 0.0; return EndpointKind::BoundaryLeft;
        case 1: snapped.x = d.width(); return EndpointKind::BoundaryRight;
        case 2: snapped.y = 0.0; return EndpointKind::BoundaryBottom;
        default: snapped.y = d.height(); return EndpointKind::BoundaryTop;
    }
}

}  // namespace

CurveNetwork apply(const CurveNetwork& network, const TopologyEvent& event) {
    CurveNetwork net = network;
    const auto& parts = event.participants;
    const auto need = [&](std::size_t count) {
        if (parts.size() != count) {
            throw TopologyError(std::string(to_string(event.kind)) + ": wrong participant count");
        }
    };

    switch (event.kind) {
        case EventKind::CurveDelete: {
            need(1);
            net.curves.erase(net.curves.begin() + static_cast<std::ptrdiff_t>(position_of(net, parts[0].curve)));
            break;
        }
        case EventKind::FreeEndsClose: {
            need(2);
            if (parts[0].curve != parts[1].curve) {
                throw TopologyError("free-ends-close: participants on different curves");
            }
            const std::size_t pos = position_of(net, parts[0].curve);
            const auto& c = net.curves[pos];
            require_node(c, parts[0].node);
            require_node(c, parts[1].node);
            if (end_at(c, parts[0].node) == end_at(c, parts[1].node)) {
                throw TopologyError("free-ends-close: both participants are the same end");
            }
            net.curves[pos] = close_ends(c);
            break;
        }
        case EventKind::FreeEndsMerge: {
            need(2);
            if (parts[0].curve == parts[1].curve) {
                throw TopologyError("free-ends-merge: participants on the same curve");
            }
            const std::size_t pa = position_of(net, parts[0].curve);
            const std::size_t pb = position_of(net, parts[1].curve);
            const auto& a = net.curves[pa];
            const auto& b = net.curves[pb];
            require_node(a, parts[0].node);
            require_node(b, parts[1].node);
            PolygonalCurve merged = merge_ends(a, end_at(a, parts[0].node), b, end_at(b, parts[1].node));
            net.curves[pa] = std::move(merged);
            net.curves.erase(net.curves.begin() + static_cast<std::ptrdiff_t>(pb));
            break;
        }
        case EventKind::TripleJunction: {
            need(2);
            const std::size_t pos = position_of(net, parts[0].curve);
            auto& c = net.curves[pos];
            require_node(c, parts[0].node);
            const CurveEnd which = end_at(c, parts[0].node);
            if (!c.is_free(which)) {
                throw TopologyError("triple-junction: participant is not a free end");
            }
            position_of(net, parts[1].curve);
            (which == CurveEnd::Start ? c.frozen_start : c.frozen_end) = true;
            break;
        }
        case EventKind::BoundaryAttach: {
            need(1);
            const std::size_t pos = position_of(net, parts[0].curve);
            auto& c = net.curves[pos];
            require_node(c, parts[0].node);
            const CurveEnd which = end_at(c, parts[0].node);
            if (!c.is_free(which)) {
                throw TopologyError("boundary-attach: participant is not a free end");
            }
            Vec2 snapped;
            const EndpointKind kind = nearest_edge(c.nodes[parts[0].node], net.domain, snapped);
            const bool start = which == CurveEnd::Start;
            (start ? c.nodes.front() : c.nodes.back()) = snapped;
            (start ? c.start : c.end) = kind;
            (start ? c.frozen_start : c.frozen_end) = false;
            // The snap may land on the neighboring node; drop it when the curve can spare it.
            const std::size_t nb = start ? 1 : c.size() - 2;
            if (c.nodes[nb] == snapped) {
                if (c.size() < 3) {
                    throw TopologyError("boundary-attach: curve collapses onto the border");
                }
                c.nodes.erase(c.nodes.begin() + static_cast<std::ptrdiff_t>(nb));
            }
            break;
        }
        case EventKind::Split: {
            need(2);
            if (parts[0].curve != parts[1].curve) {
                throw TopologyError("split: participants on different curves");
            }
            const std::size_t pos = position_of(net, parts[0].curve);
            const PolygonalCurve c = net.curves[pos];
            std::size_t p = std::min(parts[0].node, parts[1].node);
            std::size_t q = std::max(parts[0].node, parts[1].node);
            require_interior(c, p);
            require_interior(c, q);
            if (index_distance(c, p, q) <= 2) {
                throw TopologyError("split: participants are neighbors");
            }
            int fresh = net.next_id();
            const auto k = EndpointKind::Closed;
            if (c.closed()) {
                const std::size_t n = c.size();
                replace(net, pos,
                        {make_curve(c.id, run(c, (q + 1) % n, (p + n - 1) % n), k, k),
                         make_curve(fresh, run(c, p + 1, q - 1), k, k)});
            } else {
                replace(net, pos,
                        {make_curve(c.id, run(c, 0, p - 1), c.start, EndpointKind::Free),
                         make_curve(fresh, run(c, p + 1, q - 1), k, k),
                         make_curve(fresh + 1, run(c, q + 1, c.size() - 1), EndpointKind::Free, c.end)});
            }
            break;
        }
        case EventKind::CurvePairMerge: {
            need(2);
            if (parts[0].curve == parts[1].curve) {
                throw TopologyError("curve-pair-merge: participants on the same curve");
            }
            const std::size_t pa = position_of(net, parts[0].curve);
            const std::size_t pb = position_of(net, parts[1].curve);
            PolygonalCurve a = net.curves[pa];
            PolygonalCurve b = net.curves[pb];
            std::size_t p = parts[0].node;
            std::size_t q = parts[1].node;
            require_interior(a, p);
            require_interior(b, q);
            if (a.closed() && !b.closed()) {
                std::swap(a, b);
                std::swap(p, q);
            }
            std::vector<PolygonalCurve> pieces;
            const std::size_t na = a.size();
            const std::size_t nb = b.size();
            if (a.closed()) {
                Nodes nodes = run(a, (p + 1) % na, (p + na - 1) % na);
                Nodes tail = run(b, (q + 1) % nb, (q + nb - 1) % nb);
                nodes.insert(nodes.end(), tail.begin(), tail.end());
                pieces.push_back(make_curve(a.id, std::move(nodes), EndpointKind::Closed, EndpointKind::Closed));
            } else if (b.closed()) {
                Nodes nodes = run(a, 0, p - 1);
                Nodes loop = run(b, (q + 1) % nb, (q + nb - 1) % nb);
                Nodes tail = run(a, p + 1, na - 1);
                nodes.insert(nodes.end(), loop.begin(), loop.end());
                nodes.insert(nodes.end(), tail.begin(), tail.end());
                pieces.push_back(make_curve(a.id, std::move(nodes), a.start, a.end));
            } else {
                Nodes first = run(a, 0, p - 1);
                Nodes first_tail = run(b, q + 1, nb - 1);
                first.insert(first.end(), first_tail.begin(), first_tail.end());
                Nodes second = run(b, 0, q - 1);
                Nodes second_tail = run(a, p + 1, na - 1);
                second.insert(second.end(), second_tail.begin(), second_tail.end());
                pieces.push_back(make_curve(a.id, std::move(first), a.start, b.end));
                pieces.push_back(make_curve(b.id, std::move(second), b.start, a.end));
            }
            const std::size_t lo = std::min(pa, pb);
            net.curves.erase(net.curves.begin() + static_cast<std::ptrdiff_t>(std::max(pa, pb)));
            replace(net, lo, std::move(pieces));
            break;
        }
    }
    return net;
}

}  // namespace freeseg
