#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "freeseg/geometry.hpp"

namespace freeseg {

// Declaration order is also the order in which detected events are returned.
enum class EventKind {
    CurveDelete,     // curve too short or with too few nodes
    FreeEndsClose,   // both free ends of one curve meet
    FreeEndsMerge,   // free ends of two curves meet
    TripleJunction,  // a free end meets an interior node
    Split,           // two far-apart parts of one curve meet
    CurvePairMerge,  // interior nodes of two curves meet
    BoundaryAttach,  // free end close to the image border
};

std::string_view to_string(EventKind kind);

struct NodeRef {
    int curve = 0;
    std::size_t node = 0;
    friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

struct TopologyEvent {
    EventKind kind = EventKind::CurveDelete;
    std::vector<NodeRef> participants;
    friend auto operator<=>(const TopologyEvent&, const TopologyEvent&) = default;
};

struct TopologyParams {
    double cell_size = 8.0;       // background grid cell c
    double min_length = 16.0;     // curves shorter than this are deleted
    std::size_t min_nodes = 3;    // as are curves with fewer nodes
};

/// Background-grid collision scan. Two nodes sharing a cell collide unless they are within two
/// indices of each other on one curve, or the shorter arc joining them along their curve is
/// under 2c (a gently curving stretch of one curve, not a fold). Each cell reports at most
/// one collision, preferring free-end pairs; collisions between the same curves of the same
/// kind are reported once, for the closest pair. Frozen free ends and boundary ends take no
/// part. Events come back sorted.
std::vector<TopologyEvent> detect(const CurveNetwork& network, const TopologyParams& params);

/// Executes one event. Throws TopologyError when the event does not match the network.
CurveNetwork apply(const CurveNetwork& network, const TopologyEvent& event);

/// "event <step> <kind> <curve ids>"
std::string format_event(std::size_t step, const TopologyEvent& event);

}  // namespace freeseg
