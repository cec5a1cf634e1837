#include "freeseg/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "freeseg/denoiser.hpp"
#include "freeseg/errors.hpp"

namespace freeseg {

std::string_view to_string(RunMode mode) {
    switch (mode) {
        case RunMode::FreeEnd: return "freeend";
        case RunMode::ChanVesePc: return "chanvese-pc";
        case RunMode::Postprocess: return "postprocess";
    }
    return "freeend";
}

EvolveParams RunConfig::evolve_params() const {
    EvolveParams p;
    p.sigma = sigma;
    p.lambda = lambda;
    p.dt = dt;
    p.a = a;
    p.endpoint_normal_motion = endpoint_normal_motion;
    p.h_min = 0.5 * h_target;
    p.h_max = 1.5 * h_target;
    return p;
}

TopologyParams RunConfig::topology_params() const {
    TopologyParams t;
    t.cell_size = 2.0 * h_target;
    t.min_length = l_min > 0.0 ? l_min : 4.0 * h_target;
    t.min_nodes = 3;
    return t;
}

void validate(const RunConfig& c) {
    const auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw ParameterError(std::string("config: ") + what);
        }
    };
    require(c.sigma > 0.0, "sigma must be positive");
    require(c.lambda > 0.0, "lambda must be positive");
    require(c.dt > 0.0, "dt must be positive");
    require(c.a > 0.0, "a must be positive");
    require(c.bulk_cadence >= 1, "bulk_cadence must be at least 1");
    require(c.tol > 0.0 && c.tol < 1.0, "tol must lie in (0, 1)");
    require(c.h_target > 0.0, "h_target must be positive");
    require(c.l_min >= 0.0, "l_min must not be negative");
    require(c.noise >= 0.0, "noise must not be negative");
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw FormatError("config: '" + key + "' needs a number, got '" + v + "'");
    }
    return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw FormatError("config: '" + key + "' needs a non-negative integer, got '" + v + "'");
    }
    return out;
}

bool parse_flag(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") {
        return true;
    }
    if (v == "off" || v == "false" || v == "0") {
        return false;
    }
    throw FormatError("config: '" + key + "' needs on/off, got '" + v + "'");
}

RunMode parse_mode(const std::string& v) {
    for (RunMode m : {RunMode::FreeEnd, RunMode::ChanVesePc, RunMode::Postprocess}) {
        if (v == to_string(m)) {
            return m;
        }
    }
    throw FormatError("config: unknown mode '" + v + "'");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::map<std::string, std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw FormatError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (!seen.emplace(key, value).second) {
            throw FormatError("config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
        }
        if (key == "image") c.image = value;
        else if (key == "generator") c.generator = value;
        else if (key == "curves") c.curves = value;
        else if (key == "sigma") c.sigma = parse_real(key, value);
        else if (key == "lambda") c.lambda = parse_real(key, value);
        else if (key == "dt") c.dt = parse_real(key, value);
        else if (key == "a") c.a = parse_real(key, value);
        else if (key == "max_steps") c.max_steps = parse_count(key, value);
        else if (key == "bulk_cadence") c.bulk_cadence = parse_count(key, value);
        else if (key == "mode") c.mode = parse_mode(value);
        else if (key == "tol") c.tol = parse_real(key, value);
        else if (key == "pc_steps") c.pc_steps = parse_count(key, value);
        else if (key == "h_target") c.h_target = parse_real(key, value);
        else if (key == "l_min") c.l_min = parse_real(key, value);
        else if (key == "endpoint_normal_motion") c.endpoint_normal_motion = parse_flag(key, value);
        else if (key == "output") c.output = value;
        else if (key == "snapshot_every") c.snapshot_every = parse_count(key, value);
        else if (key == "seed") c.seed = parse_count(key, value);
        else if (key == "noise") c.noise = parse_real(key, value);
        else throw FormatError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    RunConfig c = parse_config(in);
    // Relative input and output paths resolve against the config file's directory.
    const auto base = path.parent_path();
    for (auto* p : {&c.image, &c.curves, &c.output}) {
        if (!p->empty() && p->is_relative()) {
            *p = base / *p;
        }
    }
    return c;
}

void write_config(std::ostream& out, const RunConfig& c) {
    if (!c.image.empty()) out << "image = " << c.image.string() << '\n';
    if (!c.generator.empty()) out << "generator = " << c.generator << '\n';
    out << "curves = " << c.curves.string() << '\n'
        << "sigma = " << fmt(c.sigma) << '\n'
        << "lambda = " << fmt(c.lambda) << '\n'
        << "dt = " << fmt(c.dt) << '\n'
        << "a = " << fmt(c.a) << '\n'
        << "max_steps = " << c.max_steps << '\n'
        << "bulk_cadence = " << c.bulk_cadence << '\n'
        << "mode = " << to_string(c.mode) << '\n'
        << "tol = " << fmt(c.tol) << '\n'
        << "pc_steps = " << c.pc_steps << '\n'
        << "h_target = " << fmt(c.h_target) << '\n'
        << "l_min = " << fmt(c.l_min) << '\n'
        << "endpoint_normal_motion = " << (c.endpoint_normal_motion ? "on" : "off") << '\n'
        << "output = " << c.output.string() << '\n'
        << "snapshot_every = " << c.snapshot_every << '\n'
        << "seed = " << c.seed << '\n'
        << "noise = " << fmt(c.noise) << '\n';
}

GridImage generate_image(const std::string& spec) {
    std::istringstream in(spec);
    std::string kind;
    std::size_t nx = 0;
    std::size_t ny = 0;
    if (!(in >> kind >> nx >> ny)) {
        throw FormatError("generator: expected '<kind> <nx> <ny> ...', got '" + spec + "'");
    }
    std::vector<double> args;
    for (double v = 0.0; in >> v;) {
        args.push_back(v);
    }
    if (!in.eof()) {
        throw FormatError("generator: malformed arguments in '" + spec + "'");
    }
    const auto want = [&](std::size_t n) {
        if (args.size() != n) {
            throw FormatError("generator '" + kind + "' takes " + std::to_string(n) + " numbers after the size");
        }
    };
    if (kind == "crack") {
        want(0);
        return generate_crack_tip(nx, ny);
    }
    TwoRegionSpec s;
    if (kind == "disk") {
        want(5);
        s.shape = DiskRegion{{args[0], args[1]}, args[2]};
    } else if (kind == "halfplane") {
        want(3);
        s.shape = HalfPlaneRegion{args[0]};
    } else if (kind == "stripe") {
        want(5);
        s.shape = StripeRegion{args[0], args[1], args[2]};
    } else {
        throw FormatError("generator: unknown kind '" + kind + "'");
    }
    s.inside = args[args.size() - 2];
    s.outside = args[args.size() - 1];
    return generate_two_region(nx, ny, s);
}

CurveNetwork postprocess_delete_nodes(const CurveNetwork& network, const GridImage& u0, double tol, double a) {
    if (!(tol > 0.0 && tol < 1.0)) {
        throw ParameterError("postprocess: tol must lie in (0, 1)");
    }
    CurveNetwork out;
    out.domain = network.domain;
    int fresh = network.next_id();
    for (const auto& c : network.curves) {
        const std::size_t n = c.size();
        std::vector<char> keep(n);
        std::size_t kept = 0;
        for (std::size_t k = 0; k < n; ++k) {
            keep[k] = jump_across(c, k, u0, a) >= tol;
            kept += keep[k] != 0 ? 1 : 0;
        }
        if (kept == n) {
            out.curves.push_back(c);
            continue;
        }
        if (kept == 0) {
            continue;
        }
        // Runs of kept nodes. For closed curves start right after a dropped node so that no
        // run wraps.
        std::size_t first = 0;
        if (c.closed()) {
            while (keep[first] != 0) {
                ++first;
            }
            first = (first + 1) % n;
        }
        std::vector<PolygonalCurve> pieces;
        PolygonalCurve cur;
        const auto flush = [&](bool touches_end) {
            if (cur.nodes.empty()) {
                return;
            }
            if (!c.closed() && touches_end) {
                cur.end = c.end;
            }
            pieces.push_back(std::move(cur));
            cur = PolygonalCurve{};
        };
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t k = (first + s) % n;
            if (keep[k] == 0) {
                flush(false);
                continue;
            }
            if (cur.nodes.empty()) {
                cur.start = (!c.closed() && k == 0) ? c.start : EndpointKind::Free;
                cur.end = EndpointKind::Free;
            }
            cur.nodes.push_back(c.nodes[k]);
        }
        flush(true);
        bool first_piece = true;
        for (auto& p : pieces) {
            if (p.nodes.size() < 2) {
                continue;
            }
            p.id = first_piece ? c.id : fresh++;
            first_piece = false;
            out.curves.push_back(std::move(p));
        }
    }
    return out;
}

void write_energy_csv(std::ostream& out, const std::vector<EnergyRecord>& log) {
    out << "step,length_term,gradient_term,fidelity_term,total\n";
    for (const auto& r : log) {
        out << r.step << ',' << fmt(r.energy.length_term) << ',' << fmt(r.energy.gradient_term) << ','
            << fmt(r.energy.fidelity_term) << ',' << fmt(r.energy.total) << '\n';
    }
}

namespace {

constexpr std::size_t kStillSteps = 50;
constexpr double kStillFraction = 1e-4;
constexpr std::size_t kMaxEventsPerStep = 64;

class Runner {
public:
    Runner(const RunConfig& cfg, SegmentationState& st, const StepObserver& obs)
        : cfg_(cfg), st_(st), obs_(obs), ep_(cfg.evolve_params()), tp_(cfg.topology_params()) {}

    void run() {
        validate(st_.network);
        if (cfg_.mode == RunMode::FreeEnd) {
            phase(false, cfg_.max_steps);
            return;
        }
        for (const auto& c : st_.network.curves) {
            if (!c.closed() && (c.start == EndpointKind::Free || c.end == EndpointKind::Free)) {
                throw ParameterError("chanvese-pc mode needs closed or boundary-attached curves; curve " +
                                     std::to_string(c.id) + " has a free end");
            }
        }
        const std::size_t pc_steps = cfg_.mode == RunMode::ChanVesePc ? cfg_.max_steps : cfg_.pc_steps;
        if (!phase(true, pc_steps) || cfg_.mode == RunMode::ChanVesePc) {
            return;
        }
        const std::size_t before = node_count();
        st_.network = postprocess_delete_nodes(st_.network, st_.u0, cfg_.tol, cfg_.a);
        st_.event_log.push_back("note " + std::to_string(st_.step) + " postprocess removed " +
                                std::to_string(before - node_count()) + " nodes");
        if (st_.network.curves.empty()) {
            st_.status = "all curves deleted";
            return;
        }
        phase(false, cfg_.max_steps);
    }

private:
    std::size_t node_count() const {
        std::size_t n = 0;
        for (const auto& c : st_.network.curves) {
            n += c.size();
        }
        return n;
    }

    void refresh_u(bool pc) {
        LinkMasks m = compute_masks(st_.network, st_.u0.domain());
        if (masks_ && *masks_ == m) {
            return;
        }
        if (pc) {
            st_.u = region_means(st_.u0, m).field;
        } else {
            const GridImage warm = st_.u;
            st_.u = denoise(st_.u0, m, cfg_.lambda, &warm);
        }
        masks_ = std::move(m);
    }

    void record() {
        st_.energy_log.push_back({st_.step, discrete_ms_energy(st_.network, st_.u, st_.u0, cfg_.sigma, cfg_.lambda)});
    }

    void handle_topology() {
        for (std::size_t round = 0; round < kMaxEventsPerStep; ++round) {
            const auto events = detect(st_.network, tp_);
            bool applied = false;
            for (const auto& ev : events) {
                try {
                    CurveNetwork next = apply(st_.network, ev);
                    validate(next);
                    st_.network = std::move(next);
                    st_.event_log.push_back(format_event(st_.step, ev));
                    applied = true;
                    break;
                } catch (const Error& e) {
                    st_.event_log.push_back("note " + std::to_string(st_.step) + " skipped " +
                                            std::string(to_string(ev.kind)) + ": " + e.what());
                }
            }
            if (!applied) {
                return;
            }
        }
    }

    // Returns false when the run has to stop altogether.
    bool phase(bool pc, std::size_t steps) {
        masks_.reset();
        refresh_u(pc);
        record();
        if (obs_ && !obs_(st_)) {
            st_.status = "stopped";
            return false;
        }
        std::size_t still = 0;
        st_.status = "max steps";
        for (std::size_t k = 0; k < steps; ++k) {
            if (k > 0 && k % cfg_.bulk_cadence == 0) {
                refresh_u(pc);
            }
            StepReport rep;
            st_.network = step(st_.network, st_.u0, st_.u, ep_, &rep);
            ++st_.step;
            for (const auto& note : rep.notes) {
                st_.event_log.push_back("note " + std::to_string(st_.step) + " " + note);
            }
            handle_topology();
            if (st_.network.curves.empty()) {
                st_.status = "all curves deleted";
                record();
                if (obs_) {
                    obs_(st_);
                }
                return false;
            }
            record();
            if (obs_ && !obs_(st_)) {
                st_.status = "stopped";
                return false;
            }
            still = rep.max_displacement < kStillFraction * st_.u0.h() ? still + 1 : 0;
            if (still >= kStillSteps) {
                st_.status = "converged";
                return true;
            }
        }
        return true;
    }

    const RunConfig& cfg_;
    SegmentationState& st_;
    const StepObserver& obs_;
    EvolveParams ep_;
    TopologyParams tp_;
    std::optional<LinkMasks> masks_;
};

void run_into(SegmentationState& st, const RunConfig& config, const StepObserver& observer) {
    validate(config);
    Runner(config, st, observer).run();
}

SegmentationState initial_state(const GridImage& u0, const CurveNetwork& initial) {
    if (!(u0.domain() == initial.domain)) {
        throw ParameterError("run: image and network have different grids");
    }
    SegmentationState st;
    st.network = initial;
    st.u0 = u0;
    st.u = u0;
    return st;
}

std::filesystem::path snapshot_path(const std::filesystem::path& dir, std::size_t step) {
    return dir / ("curves_" + std::to_string(step) + ".txt");
}

void write_outputs(const RunConfig& config, const SegmentationState& st) {
    const auto& dir = config.output;
    {
        std::ofstream out(dir / "energy.csv");
        write_energy_csv(out, st.energy_log);
    }
    {
        std::ofstream out(dir / "events.log");
        for (const auto& line : st.event_log) {
            out << line << '\n';
        }
        out << "status " << st.step << ' ' << st.status << '\n';
    }
    save_curves(snapshot_path(dir, st.step), st.network.curves);
    save_pgm(st.u, dir / "u_final.pgm");
}

}  // namespace

SegmentationState run_segmentation(const RunConfig& config, const GridImage& u0, const CurveNetwork& initial,
                                   const StepObserver& observer) {
    SegmentationState st = initial_state(u0, initial);
    run_into(st, config, observer);
    return st;
}

SegmentationState run_segmentation(const RunConfig& config) {
    validate(config);
    if (config.image.empty() == config.generator.empty()) {
        throw ParameterError("config: give exactly one of 'image' and 'generator'");
    }
    if (config.curves.empty()) {
        throw ParameterError("config: 'curves' is required");
    }
    GridImage u0 = config.image.empty() ? generate_image(config.generator) : load_pgm(config.image);
    if (config.noise > 0.0) {
        u0 = add_noise(u0, config.noise, config.seed);
    }
    CurveNetwork net;
    net.domain = u0.domain();
    net.curves = load_curves(config.curves);

    SegmentationState st = initial_state(u0, net);
    const bool write = !config.output.empty();
    if (!write) {
        run_into(st, config, {});
        return st;
    }
    std::filesystem::create_directories(config.output);
    {
        std::ofstream echo(config.output / "config.echo");
        write_config(echo, config);
    }
    save_curves(snapshot_path(config.output, 0), net.curves);
    const StepObserver snap = [&](const SegmentationState& s) {
        if (config.snapshot_every > 0 && s.step > 0 && s.step % config.snapshot_every == 0) {
            save_curves(snapshot_path(config.output, s.step), s.network.curves);
        }
        return true;
    };
    try {
        run_into(st, config, snap);
    } catch (const SolverError& e) {
        st.status = std::string("solver failure: ") + e.what();
        write_outputs(config, st);
        throw;
    }
    write_outputs(config, st);
    return st;
}

}  // namespace freeseg
