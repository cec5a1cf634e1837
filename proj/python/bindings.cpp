#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "freeseg/denoiser.hpp"
#include "freeseg/energy.hpp"
#include "freeseg/errors.hpp"
#include "freeseg/evolver.hpp"
#include "freeseg/pipeline.hpp"
#include "freeseg/topology.hpp"

namespace py = pybind11;
using namespace freeseg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Images cross the boundary as (ny + 1, nx + 1) arrays, row j holding nodes (., j).
GridImage to_image(const Array& a, double h) {
    if (a.ndim() != 2 || a.shape(0) < 1 || a.shape(1) < 1) {
        throw ParameterError("image must be a non-empty 2-d array");
    }
    const Domain d{static_cast<std::size_t>(a.shape(1) - 1), static_cast<std::size_t>(a.shape(0) - 1), h};
    return GridImage(d, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const GridImage& img) {
    Array out({img.ny() + 1, img.nx() + 1});
    std::copy(img.values().begin(), img.values().end(), out.mutable_data());
    return out;
}

Array nodes_array(const PolygonalCurve& c) {
    Array out({c.size(), std::size_t{2}});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t k = 0; k < c.size(); ++k) {
        m(k, 0) = c.nodes[k].x;
        m(k, 1) = c.nodes[k].y;
    }
    return out;
}

void set_nodes(PolygonalCurve& c, const Array& a) {
    if (a.ndim() != 2 || a.shape(1) != 2) {
        throw ParameterError("nodes must be an (n, 2) array");
    }
    auto r = a.unchecked<2>();
    c.nodes.resize(static_cast<std::size_t>(a.shape(0)));
    for (std::size_t k = 0; k < c.nodes.size(); ++k) {
        c.nodes[k] = {r(k, 0), r(k, 1)};
    }
}

CurveNetwork network(const std::vector<PolygonalCurve>& curves, const GridImage& img) {
    return CurveNetwork{curves, img.domain()};
}

py::dict energy_dict(const EnergyBreakdown& e) {
    py::dict d;
    d["length"] = e.length_term;
    d["gradient"] = e.gradient_term;
    d["fidelity"] = e.fidelity_term;
    d["total"] = e.total;
    return d;
}

}  // namespace

PYBIND11_MODULE(_freeseg, m) {
    m.doc() = "Image segmentation and restoration with open and closed active contours";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

    py::class_<PolygonalCurve>(m, "Curve")
        .def(py::init([](const Array& nodes, const std::string& start, const std::string& end, int id) {
                 PolygonalCurve c;
                 c.id = id;
                 set_nodes(c, nodes);
                 c.start = parse_endpoint_kind(start);
                 c.end = parse_endpoint_kind(end);
                 return c;
             }),
             py::arg("nodes"), py::arg("start") = "free", py::arg("end") = "free", py::arg("id") = 0)
        .def_readwrite("id", &PolygonalCurve::id)
        .def_property("nodes", &nodes_array, &set_nodes)
        .def_property(
            "start", [](const PolygonalCurve& c) { return std::string(to_string(c.start)); },
            [](PolygonalCurve& c, const std::string& k) { c.start = parse_endpoint_kind(k); })
        .def_property(
            "end", [](const PolygonalCurve& c) { return std::string(to_string(c.end)); },
            [](PolygonalCurve& c, const std::string& k) { c.end = parse_endpoint_kind(k); })
        .def_readwrite("frozen_start", &PolygonalCurve::frozen_start)
        .def_readwrite("frozen_end", &PolygonalCurve::frozen_end)
        .def_property_readonly("closed", &PolygonalCurve::closed)
        .def_property_readonly("length", &curve_length)
        .def("__len__", &PolygonalCurve::size)
        .def("__repr__", [](const PolygonalCurve& c) {
            std::ostringstream s;
            s << "Curve(id=" << c.id << ", nodes=" << c.size() << ", start=" << to_string(c.start)
              << ", end=" << to_string(c.end) << ")";
            return s.str();
        });

    m.def("segment_curve", [](std::pair<double, double> a, std::pair<double, double> b, double spacing,
                              const std::string& start, const std::string& end, int id) {
        return make_segment(id, {a.first, a.second}, {b.first, b.second}, spacing, parse_endpoint_kind(start),
                            parse_endpoint_kind(end));
    }, py::arg("start_point"), py::arg("end_point"), py::arg("spacing") = 4.0, py::arg("start") = "free",
          py::arg("end") = "free", py::arg("id") = 0, "Straight open curve with roughly even node spacing.");
    m.def("circle_curve", [](std::pair<double, double> c, double r, std::size_t count, int id) {
        return make_circle(id, {c.first, c.second}, r, count);
    }, py::arg("center"), py::arg("radius"), py::arg("count") = 64, py::arg("id") = 0,
          "Closed anticlockwise regular polygon.");
    m.def("load_curves", [](const std::filesystem::path& p) { return load_curves(p); }, py::arg("path"));
    m.def("save_curves", [](const std::filesystem::path& p, const std::vector<PolygonalCurve>& cs) {
        save_curves(p, cs);
    }, py::arg("path"), py::arg("curves"));

    m.def("generate", [](const std::string& spec) { return to_array(generate_image(spec)); }, py::arg("spec"),
          "Synthetic image from a generator string such as 'crack 300 300' or 'disk 64 64 32 32 10 0.8 0.2'.");
    m.def("add_noise", [](const Array& img, double amplitude, std::uint64_t seed) {
        return to_array(add_noise(to_image(img, 1.0), amplitude, seed));
    }, py::arg("image"), py::arg("amplitude"), py::arg("seed") = 0);
    m.def("load_pgm", [](const std::filesystem::path& p) { return to_array(load_pgm(p)); }, py::arg("path"));
    m.def("save_pgm", [](const Array& img, const std::filesystem::path& p) { save_pgm(to_image(img, 1.0), p); },
          py::arg("image"), py::arg("path"));

    m.def("denoise", [](const Array& u0, const std::vector<PolygonalCurve>& curves, double lambda, double h) {
        const GridImage img = to_image(u0, h);
        return to_array(denoise(img, network(curves, img), lambda));
    }, py::arg("u0"), py::arg("curves"), py::arg("lam"), py::arg("h") = 1.0,
          "Edge-preserving smoothing that never diffuses across the given curves.");
    m.def("energy", [](const std::vector<PolygonalCurve>& curves, const Array& u, const Array& u0, double sigma,
                       double lambda, double h) {
        const GridImage img0 = to_image(u0, h);
        return energy_dict(discrete_ms_energy(network(curves, img0), to_image(u, h), img0, sigma, lambda));
    }, py::arg("curves"), py::arg("u"), py::arg("u0"), py::arg("sigma"), py::arg("lam"), py::arg("h") = 1.0,
          "Discrete Mumford-Shah energy split into its three terms.");
    m.def("endpoint_velocity", [](const PolygonalCurve& c, bool at_end, const Array& u, double sigma, double h) {
        const EndpointVelocity v = endpoint_velocity(c, at_end ? CurveEnd::End : CurveEnd::Start, to_image(u, h),
                                                     sigma);
        return std::make_pair(v.tangential, v.normal);
    }, py::arg("curve"), py::arg("at_end"), py::arg("u"), py::arg("sigma"), py::arg("h") = 1.0,
          "(tangential, normal) speed of a free end.");

    m.def("detect_events", [](const std::vector<PolygonalCurve>& curves, const Array& image, double cell_size,
                              double min_length) {
        const GridImage img = to_image(image, 1.0);
        TopologyParams tp;
        tp.cell_size = cell_size;
        tp.min_length = min_length;
        std::vector<std::string> out;
        for (const auto& e : detect(network(curves, img), tp)) {
            out.push_back(format_event(0, e).substr(8));
        }
        return out;
    }, py::arg("curves"), py::arg("image"), py::arg("cell_size") = 8.0, py::arg("min_length") = 16.0,
          "Pending topology events as '<kind> <curve ids>' strings.");

    m.def("_run", [](const Array& u0, const std::vector<PolygonalCurve>& curves, const std::string& config_text) {
        std::istringstream in(config_text);
        const RunConfig cfg = parse_config(in);
        const GridImage img = to_image(u0, 1.0);
        SegmentationState st;
        {
            py::gil_scoped_release release;
            st = run_segmentation(cfg, img, network(curves, img));
        }
        Array energies({st.energy_log.size(), std::size_t{5}});
        auto e = energies.mutable_unchecked<2>();
        for (std::size_t k = 0; k < st.energy_log.size(); ++k) {
            const auto& r = st.energy_log[k];
            e(k, 0) = static_cast<double>(r.step);
            e(k, 1) = r.energy.length_term;
            e(k, 2) = r.energy.gradient_term;
            e(k, 3) = r.energy.fidelity_term;
            e(k, 4) = r.energy.total;
        }
        py::dict out;
        out["curves"] = st.network.curves;
        out["u"] = to_array(st.u);
        out["energy"] = energies;
        out["events"] = st.event_log;
        out["status"] = st.status;
        out["steps"] = st.step;
        return out;
    }, py::arg("u0"), py::arg("curves"), py::arg("config"));
}
