#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "freeseg/errors.hpp"
#include "freeseg/pipeline.hpp"

using namespace freeseg;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("freeseg_pipeline_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "freeseg");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config parse and write round trip") {
    std::istringstream in(R"(# crack run
generator = crack 300 300
curves = seed.txt   # initial curve
sigma = 2e-5
lambda = 0.002
dt = 0.001
max_steps = 5000
mode = postprocess
tol = 0.3
endpoint_normal_motion = off
seed = 42
)");
    const RunConfig c = parse_config(in);
    CHECK(c.generator == "crack 300 300");
    CHECK(c.curves == "seed.txt");
    CHECK(c.sigma == 2e-5);
    CHECK(c.max_steps == 5000);
    CHECK(c.mode == RunMode::Postprocess);
    CHECK_FALSE(c.endpoint_normal_motion);
    CHECK(c.seed == 42);
    CHECK(c.bulk_cadence == 10);

    std::stringstream out;
    write_config(out, c);
    const RunConfig back = parse_config(out);
    CHECK(back.generator == c.generator);
    CHECK(back.sigma == c.sigma);
    CHECK(back.dt == c.dt);
    CHECK(back.tol == c.tol);
    CHECK(back.mode == c.mode);
    CHECK(back.endpoint_normal_motion == c.endpoint_normal_motion);
}

TEST_CASE("config errors") {
    const auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return parse_config(in);
    };
    CHECK_THROWS_AS(parse("bogus = 1\n"), FormatError);
    CHECK_THROWS_AS(parse("sigma = 1\nsigma = 2\n"), FormatError);
    CHECK_THROWS_AS(parse("sigma = abc\n"), FormatError);
    CHECK_THROWS_AS(parse("max_steps = -3\n"), FormatError);
    CHECK_THROWS_AS(parse("mode = fast\n"), FormatError);
    CHECK_THROWS_AS(parse("no equals sign\n"), FormatError);
    CHECK_THROWS_AS(parse("tol = 1.5\n"), ParameterError);
    CHECK_THROWS_AS(parse("dt = 0\n"), ParameterError);
    CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), FormatError);
}

TEST_CASE("config paths resolve against the config directory") {
    const auto dir = scratch("paths");
    std::ofstream(dir / "run.cfg") << "image = in.pgm\ncurves = /abs/seed.txt\noutput = out\n";
    const RunConfig c = load_config(dir / "run.cfg");
    CHECK(c.image == dir / "in.pgm");
    CHECK(c.curves == "/abs/seed.txt");
    CHECK(c.output == dir / "out");
}

TEST_CASE("image generator strings") {
    const GridImage disk = generate_image("disk 20 10 10 5 3 0.8 0.2");
    CHECK(disk.nx() == 20);
    CHECK(disk.ny() == 10);
    CHECK(disk(10, 5) == doctest::Approx(0.8));
    CHECK(disk(0, 0) == doctest::Approx(0.2));
    const GridImage half = generate_image("halfplane 10 10 4.5 0.9 0.1");
    CHECK(half(2, 3) == doctest::Approx(0.9));
    CHECK(half(7, 3) == doctest::Approx(0.1));
    const GridImage crack = generate_image("crack 30 30");
    const GridImage direct = generate_crack_tip(30, 30);
    CHECK(std::equal(crack.values().begin(), crack.values().end(), direct.values().begin()));
    CHECK_THROWS_AS(generate_image("disk 20 10 1 2"), FormatError);
    CHECK_THROWS_AS(generate_image("blob 10 10"), FormatError);
    CHECK_THROWS_AS(generate_image("crack"), FormatError);
    CHECK_THROWS_AS(generate_image("crack 10 10 x"), FormatError);
}

TEST_CASE("zero steps returns the initial state with one energy record") {
    const GridImage u0 = generate_image("halfplane 20 20 10.5 0.8 0.2");
    const CurveNetwork net{{make_segment(0, {10.5, 0}, {10.5, 20}, 2.0, EndpointKind::BoundaryBottom,
                                         EndpointKind::BoundaryTop)},
                           u0.domain()};
    RunConfig cfg;
    cfg.max_steps = 0;
    const SegmentationState st = run_segmentation(cfg, u0, net);
    CHECK(st.step == 0);
    CHECK(st.network.curves[0].nodes == net.curves[0].nodes);
    REQUIRE(st.energy_log.size() == 1);
    CHECK(st.energy_log[0].step == 0);
    CHECK(st.energy_log[0].energy.length_term == doctest::Approx(cfg.sigma * 20.0));
}

TEST_CASE("energy log has one record per step") {
    const GridImage u0 = generate_image("disk 30 30 15 15 8 0.8 0.2");
    const CurveNetwork net{{make_circle(0, {15, 15}, 10.0, 24)}, u0.domain()};
    RunConfig cfg;
    cfg.max_steps = 12;
    cfg.bulk_cadence = 5;
    cfg.h_target = 3.0;
    const SegmentationState st = run_segmentation(cfg, u0, net);
    CHECK(st.step == 12);
    CHECK(st.energy_log.size() == 13);
    for (std::size_t k = 0; k < st.energy_log.size(); ++k) {
        CHECK(st.energy_log[k].step == k);
    }
    CHECK(st.status == "max steps");
    CHECK(st.u.nx() == u0.nx());
}

TEST_CASE("observer can stop a run") {
    const GridImage u0 = generate_image("disk 30 30 15 15 8 0.8 0.2");
    const CurveNetwork net{{make_circle(0, {15, 15}, 10.0, 24)}, u0.domain()};
    RunConfig cfg;
    cfg.max_steps = 100;
    const SegmentationState st =
        run_segmentation(cfg, u0, net, [](const SegmentationState& s) { return s.step < 3; });
    CHECK(st.step == 3);
    CHECK(st.status == "stopped");
}

TEST_CASE("chanvese-pc mode rejects free ends") {
    const GridImage u0 = generate_image("crack 40 40");
    const CurveNetwork net{{make_segment(0, {0, 20}, {10, 20}, 2.0, EndpointKind::BoundaryLeft)}, u0.domain()};
    RunConfig cfg;
    cfg.mode = RunMode::ChanVesePc;
    cfg.max_steps = 1;
    CHECK_THROWS_AS(run_segmentation(cfg, u0, net), ParameterError);
}

TEST_CASE("mismatched grids are rejected") {
    RunConfig cfg;
    CHECK_THROWS_AS(run_segmentation(cfg, GridImage(Domain{10, 10, 1.0}), CurveNetwork{{}, Domain{12, 10, 1.0}}),
                    ParameterError);
}

TEST_CASE("shrinking curve ends the run with every curve deleted") {
    const GridImage u0(Domain{40, 40, 1.0}, 0.5);
    const CurveNetwork net{{make_segment(0, {15, 20}, {25, 20}, 2.0)}, u0.domain()};
    RunConfig cfg;
    cfg.max_steps = 10;
    cfg.h_target = 3.0;
    const SegmentationState st = run_segmentation(cfg, u0, net);
    CHECK(st.network.curves.empty());
    CHECK(st.status == "all curves deleted");
    REQUIRE_FALSE(st.event_log.empty());
    CHECK(st.event_log.back().find("curve-delete") != std::string::npos);
}

TEST_CASE("postprocess node deletion") {
    const GridImage u0 = generate_image("halfplane 40 40 20.5 0.8 0.2");
    const Domain d = u0.domain();
    const PolygonalCurve on_edge =
        make_segment(0, {20.5, 0}, {20.5, 40}, 2.0, EndpointKind::BoundaryBottom, EndpointKind::BoundaryTop);

    SUBCASE("all jumps above tol keep the network") {
        const CurveNetwork net{{on_edge}, d};
        const CurveNetwork out = postprocess_delete_nodes(net, u0, 0.3, 1.5);
        REQUIRE(out.curves.size() == 1);
        CHECK(out.curves[0].nodes == on_edge.nodes);
        CHECK(out.curves[0].start == EndpointKind::BoundaryBottom);
    }
    SUBCASE("all jumps below tol remove the curve") {
        const CurveNetwork net{{make_circle(0, {8, 20}, 5.0, 16)}, d};
        CHECK(postprocess_delete_nodes(net, u0, 0.3, 1.5).curves.empty());
    }
    SUBCASE("closed curve losing an arc becomes one open curve with free ends") {
        // Follows the disk boundary except for a bulge into the flat background.
        const GridImage disk = generate_image("disk 40 40 20 20 8 0.8 0.2");
        PolygonalCurve c;
        c.id = 3;
        c.start = c.end = EndpointKind::Closed;
        for (int k = 0; k < 36; ++k) {
            const double t = 2.0 * M_PI * k / 36.0;
            const double r = (k >= 2 && k <= 8) ? 13.0 : 8.0;
            c.nodes.push_back({20.0 + r * std::cos(t), 20.0 + r * std::sin(t)});
        }
        const CurveNetwork out = postprocess_delete_nodes(CurveNetwork{{c}, d}, disk, 0.3, 1.5);
        REQUIRE(out.curves.size() == 1);
        const auto& open = out.curves[0];
        CHECK(open.id == 3);
        CHECK(open.start == EndpointKind::Free);
        CHECK(open.end == EndpointKind::Free);
        CHECK(open.size() == 29);
        for (const Vec2& p : open.nodes) {
            CHECK(length(p - Vec2{20, 20}) == doctest::Approx(8.0));
        }
    }
    SUBCASE("open curve keeps the end kinds it still owns") {
        // Goes up the edge, then turns right into the flat bright region.
        PolygonalCurve c = make_segment(0, {20.5, 0}, {20.5, 20}, 2.0, EndpointKind::BoundaryBottom);
        for (double x = 22.5; x <= 34.5; x += 2.0) {
            c.nodes.push_back({x, 20.0});
        }
        const CurveNetwork out = postprocess_delete_nodes(CurveNetwork{{c}, d}, u0, 0.3, 1.5);
        REQUIRE(out.curves.size() == 1);
        CHECK(out.curves[0].start == EndpointKind::BoundaryBottom);
        CHECK(out.curves[0].end == EndpointKind::Free);
    }
    SUBCASE("tol outside (0, 1) is rejected") {
        CHECK_THROWS_AS(postprocess_delete_nodes(CurveNetwork{{on_edge}, d}, u0, 1.0, 1.5), ParameterError);
    }
}

TEST_CASE("energy csv format") {
    std::ostringstream out;
    EnergyRecord r;
    r.step = 3;
    r.energy = {0.5, 0.25, 0.125, 0.875};
    write_energy_csv(out, {r});
    CHECK(out.str() == "step,length_term,gradient_term,fidelity_term,total\n3,0.5,0.25,0.125,0.875\n");
}

TEST_CASE("run directory outputs and determinism") {
    const auto dir = scratch("run");
    save_curves(dir / "seed.txt", std::vector{make_segment(0, {0, 30}, {22, 30}, 2.0, EndpointKind::BoundaryLeft)});
    std::ofstream(dir / "run.cfg") << "generator = crack 60 60\ncurves = seed.txt\nmax_steps = 20\nsnapshot_every = 10\n"
                                      "noise = 0.05\nseed = 9\noutput = a\n";
    const RunConfig cfg = load_config(dir / "run.cfg");
    const SegmentationState st = run_segmentation(cfg);
    for (const char* f : {"energy.csv", "events.log", "curves_0.txt", "curves_10.txt", "curves_20.txt",
                          "u_final.pgm", "config.echo"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir / "a" / f), f);
    }
    CHECK(load_curves(dir / "a" / "curves_20.txt").front().nodes == st.network.curves.front().nodes);
    RunConfig again = cfg;
    again.output = dir / "b";
    run_segmentation(again);
    CHECK(slurp(dir / "a" / "energy.csv") == slurp(dir / "b" / "energy.csv"));
    CHECK(slurp(dir / "a" / "curves_20.txt") == slurp(dir / "b" / "curves_20.txt"));
}

TEST_CASE("command line exit codes") {
    const auto dir = scratch("cli");
    const std::string img = (dir / "crack.pgm").string();
    CHECK(run_cli({"generate", "crack", "--size", "40", "--out", img}) == 0);
    CHECK(load_pgm(img).nx() == 40);
    const std::string seed = (dir / "seed.txt").string();
    CHECK(run_cli({"generate", "seeds", "--kind", "segment", "--from", "0", "20", "--to", "10", "20", "--spacing",
                   "2", "--start", "boundary-left", "--out", seed}) == 0);
    CHECK(run_cli({"denoise", "--image", img, "--curves", seed, "--lambda", "0.5", "--out",
                   (dir / "u.pgm").string()}) == 0);
    CHECK(run_cli({"energy", "--image", img, "--curves", seed, "--u", (dir / "u.pgm").string(), "--sigma", "0.1",
                   "--lambda", "0.5"}) == 0);
    CHECK(run_cli({"generate", "crack", "--bogus"}) == 1);
    CHECK(run_cli({}) == 1);
    CHECK(run_cli({"segment", "--config", (dir / "missing.cfg").string()}) == 1);
    CHECK(run_cli({"denoise", "--image", img, "--curves", seed, "--lambda", "0", "--out",
                   (dir / "v.pgm").string()}) == 1);
}
