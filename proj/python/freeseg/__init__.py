"""Segmentation and restoration of images with open and closed active contours."""

from ._freeseg import (
    Curve,
    Error,
    FormatError,
    ParameterError,
    add_noise,
    circle_curve,
    denoise,
    detect_events,
    endpoint_velocity,
    energy,
    generate,
    load_curves,
    load_pgm,
    save_curves,
    save_pgm,
    segment_curve,
)
from ._freeseg import _run

__all__ = [
    "Curve",
    "Error",
    "FormatError",
    "ParameterError",
    "add_noise",
    "circle_curve",
    "denoise",
    "detect_events",
    "endpoint_velocity",
    "energy",
    "generate",
    "load_curves",
    "load_pgm",
    "run",
    "save_curves",
    "save_pgm",
    "segment_curve",
]


def run(u0, curves, **config):
    """Runs the alternating minimization on an image array and a list of curves.

    Keyword arguments are run configuration keys (sigma, lam, dt, a, max_steps, bulk_cadence,
    mode, tol, pc_steps, h_target, l_min, endpoint_normal_motion). Returns a dict with the
    final curves, the smoothed image u, an (steps + 1, 5) energy array with columns
    step, length, gradient, fidelity, total, the event log, the status and the step count.
    """
    lines = []
    for key, value in config.items():
        if key == "lam":
            key = "lambda"
        if isinstance(value, bool):
            value = "on" if value else "off"
        lines.append(f"{key} = {value}")
    return _run(u0, list(curves), "\n".join(lines) + "\n")
