#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "freeseg/energy.hpp"
#include "freeseg/evolver.hpp"
#include "freeseg/geometry.hpp"
#include "freeseg/imaging.hpp"
#include "freeseg/topology.hpp"

namespace freeseg {

enum class RunMode { FreeEnd, ChanVesePc, Postprocess };

std::string_view to_string(RunMode mode);

struct RunConfig {
    std::filesystem::path image;  // PGM input; empty when `generator` is used
    std::string generator;        // e.g. "crack 300 300", see generate_image
    std::filesystem::path curves;
    double sigma = 2e-5;
    double lambda = 0.002;
    double dt = 1e-3;
    double a = 1.5;
    std::size_t max_steps = 1000;
    std::size_t bulk_cadence = 10;
    RunMode mode = RunMode::FreeEnd;
    double tol = 0.1;             // postprocess jump threshold
    std::size_t pc_steps = 1000;  // piecewise-constant steps before postprocessing
    double h_target = 4.0;
    double l_min = 0.0;  // 0 selects 4 * h_target
    bool endpoint_normal_motion = true;
    std::filesystem::path output;
    std::size_t snapshot_every = 0;  // 0 writes only the first and last snapshot
    std::uint64_t seed = 0;
    double noise = 0.0;  // uniform noise amplitude added to the input image

    EvolveParams evolve_params() const;
    TopologyParams topology_params() const;
};

/// Checks ranges; throws ParameterError.
void validate(const RunConfig& config);

/// Flat "key = value" lines, '#' starts a comment. Unknown keys, repeated keys and malformed
/// values throw FormatError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const RunConfig& config);

/// Synthetic input from a spec string:
///   crack <nx> <ny>
///   disk <nx> <ny> <cx> <cy> <r> <inside> <outside>
///   halfplane <nx> <ny> <x0> <inside> <outside>
///   stripe <nx> <ny> <y_center> <half_width> <x_stop> <inside> <outside>
GridImage generate_image(const std::string& spec);

struct EnergyRecord {
    std::size_t step = 0;
    EnergyBreakdown energy;
};

struct SegmentationState {
    std::size_t step = 0;
    CurveNetwork network;
    GridImage u0;
    GridImage u;
    std::vector<EnergyRecord> energy_log;
    std::vector<std::string> event_log;
    std::string status;  // "max steps", "converged" or "all curves deleted"
};

/// Called after every step with the current state; returning false stops the run.
using StepObserver = std::function<bool(const SegmentationState&)>;

/// Runs the alternating minimization on an explicit image and network. Nothing is written to
/// disk. Mode Postprocess runs config.pc_steps piecewise-constant steps, deletes low-jump
/// nodes and continues for config.max_steps free-endpoint steps.
SegmentationState run_segmentation(const RunConfig& config, const GridImage& u0, const CurveNetwork& initial,
                                   const StepObserver& observer = {});

/// Loads inputs named by the config, runs, and writes the run directory when config.output
/// is set.
SegmentationState run_segmentation(const RunConfig& config);

/// Drops every maximal run of nodes whose jump of u0 is below tol. Pieces of closed curves
/// become open curves with free ends; pieces of open curves keep the original kind on the
/// ends they still own.
CurveNetwork postprocess_delete_nodes(const CurveNetwork& network, const GridImage& u0, double tol, double a);

void write_energy_csv(std::ostream& out, const std::vector<EnergyRecord>& log);

/// Command-line entry point; returns the process exit code.
int cli_main(int argc, const char* const* argv);

}  // namespace freeseg
