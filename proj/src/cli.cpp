#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "freeseg/denoiser.hpp"
#include "freeseg/energy.hpp"
#include "freeseg/errors.hpp"
#include "freeseg/pipeline.hpp"

namespace freeseg {

namespace {

Vec2 to_point(const std::vector<double>& v) { return {v.at(0), v.at(1)}; }

CurveNetwork network_for(const GridImage& img, const std::string& curves) {
    CurveNetwork net;
    net.domain = img.domain();
    net.curves = load_curves(curves);
    validate(net);
    return net;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Segmentation and restoration with free-endpoint contours", "freeseg"};
    app.require_subcommand(1);

    std::string config_path;
    auto* segment = app.add_subcommand("segment", "run a segmentation from a config file");
    segment->add_option("--config", config_path, "config file")->required();

    std::string image;
    std::string curves;
    std::string out;
    double lambda = 0.0;
    auto* denoise_cmd = app.add_subcommand("denoise", "edge-preserving smoothing for fixed curves");
    denoise_cmd->add_option("--image", image)->required();
    denoise_cmd->add_option("--curves", curves)->required();
    denoise_cmd->add_option("--lambda", lambda)->required();
    denoise_cmd->add_option("--out", out)->required();

    std::string u_path;
    double sigma = 0.0;
    auto* energy_cmd = app.add_subcommand("energy", "print the discrete Mumford-Shah energy");
    energy_cmd->add_option("--image", image)->required();
    energy_cmd->add_option("--curves", curves)->required();
    energy_cmd->add_option("--u", u_path)->required();
    energy_cmd->add_option("--sigma", sigma)->required();
    energy_cmd->add_option("--lambda", lambda)->required();

    auto* generate = app.add_subcommand("generate", "write synthetic images or seed curves");
    generate->require_subcommand(1);

    std::size_t size = 0;
    std::size_t height = 0;
    auto* crack = generate->add_subcommand("crack", "crack-tip image");
    crack->add_option("--size", size, "pixels in x (and y unless --height)")->required();
    crack->add_option("--height", height);
    crack->add_option("--out", out)->required();

    std::string shape;
    std::vector<double> center;
    double radius = 0.0;
    double x0 = 0.0;
    double y_center = 0.0;
    double half_width = 0.0;
    double x_stop = 0.0;
    double inside = 1.0;
    double outside = 0.0;
    double noise = 0.0;
    std::uint64_t seed = 0;
    auto* two = generate->add_subcommand("tworegion", "two-intensity image");
    two->add_option("--shape", shape)->required()->check(CLI::IsMember({"disk", "halfplane", "stripe"}));
    two->add_option("--size", size)->required();
    two->add_option("--height", height);
    two->add_option("--center", center)->expected(2);
    two->add_option("--radius", radius);
    two->add_option("--x0", x0);
    two->add_option("--y-center", y_center);
    two->add_option("--half-width", half_width);
    two->add_option("--x-stop", x_stop);
    two->add_option("--inside", inside);
    two->add_option("--outside", outside);
    two->add_option("--noise", noise);
    two->add_option("--seed", seed);
    two->add_option("--out", out)->required();

    std::string kind;
    std::vector<double> from;
    std::vector<double> to;
    double spacing = 4.0;
    std::string start_kind = "free";
    std::string end_kind = "free";
    std::size_t count = 64;
    std::size_t per_row = 4;
    std::size_t per_col = 4;
    double seg_length = 16.0;
    auto* seeds = generate->add_subcommand("seeds", "initial curves in snapshot format");
    seeds->add_option("--kind", kind)->required()->check(CLI::IsMember({"segment", "circle", "grid"}));
    seeds->add_option("--from", from)->expected(2);
    seeds->add_option("--to", to)->expected(2);
    seeds->add_option("--spacing", spacing);
    seeds->add_option("--start", start_kind);
    seeds->add_option("--end", end_kind);
    seeds->add_option("--center", center)->expected(2);
    seeds->add_option("--radius", radius);
    seeds->add_option("--count", count);
    seeds->add_option("--size", size);
    seeds->add_option("--height", height);
    seeds->add_option("--per-row", per_row);
    seeds->add_option("--per-col", per_col);
    seeds->add_option("--length", seg_length);
    seeds->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*segment) {
            const SegmentationState st = run_segmentation(load_config(config_path));
            std::printf("%s after %zu steps\n", st.status.c_str(), st.step);
        } else if (*denoise_cmd) {
            const GridImage u0 = load_pgm(image);
            DenoiseReport rep;
            const GridImage u = denoise(u0, network_for(u0, curves), lambda, nullptr, &rep);
            save_pgm(u, out);
            std::printf("cg iterations %zu, residual %.3g\n", rep.iterations, rep.residual);
        } else if (*energy_cmd) {
            const GridImage u0 = load_pgm(image);
            const GridImage u = load_pgm(u_path);
            const EnergyBreakdown e = discrete_ms_energy(network_for(u0, curves), u, u0, sigma, lambda);
            std::printf("length_term,gradient_term,fidelity_term,total\n%.17g,%.17g,%.17g,%.17g\n", e.length_term,
                        e.gradient_term, e.fidelity_term, e.total);
        } else if (*crack) {
            save_pgm(generate_crack_tip(size, height == 0 ? size : height), out);
        } else if (*two) {
            TwoRegionSpec spec;
            spec.inside = inside;
            spec.outside = outside;
            if (shape == "disk") {
                if (center.size() != 2) {
                    throw ParameterError("--center x y is required for a disk");
                }
                spec.shape = DiskRegion{to_point(center), radius};
            } else if (shape == "halfplane") {
                spec.shape = HalfPlaneRegion{x0};
            } else {
                spec.shape = StripeRegion{y_center, half_width, x_stop};
            }
            GridImage img = generate_two_region(size, height == 0 ? size : height, spec);
            if (noise > 0.0) {
                img = add_noise(img, noise, seed);
            }
            save_pgm(img, out);
        } else if (*seeds) {
            std::vector<PolygonalCurve> cs;
            if (kind == "segment") {
                if (from.size() != 2 || to.size() != 2) {
                    throw ParameterError("--from x y and --to x y are required for a segment");
                }
                cs.push_back(make_segment(0, to_point(from), to_point(to), spacing, parse_endpoint_kind(start_kind),
                                          parse_endpoint_kind(end_kind)));
            } else if (kind == "circle") {
                if (center.size() != 2) {
                    throw ParameterError("--center x y is required for a circle");
                }
                cs.push_back(make_circle(0, to_point(center), radius, count));
            } else {
                if (size == 0) {
                    throw ParameterError("--size is required for a grid of seeds");
                }
                const Domain d{size, height == 0 ? size : height, 1.0};
                cs = make_segment_grid(d, per_row, per_col, seg_length, spacing);
            }
            save_curves(out, cs);
        }
    } catch (const SolverError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const TopologyError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

}  // namespace freeseg
