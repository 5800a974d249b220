from typing import Any, Dict, Optional
import os
from dotenv import load_dotenv

load_dotenv()

# Numerical tolerances used by identity checks and oracles
TOLERANCES = {
    "analytic": float(os.getenv("COVHAM_TOL_ANALYTIC", "1e-12")),
    "finite_difference": float(os.getenv("COVHAM_TOL_FD", "1e-6")),
    "fd_step": float(os.getenv("COVHAM_FD_STEP", "1e-5")),
    "gji": float(os.getenv("COVHAM_TOL_GJI", "1e-12")),
    "skew": float(os.getenv("COVHAM_TOL_SKEW", "1e-12")),
    "metric_symmetry": float(os.getenv("COVHAM_TOL_METRIC", "1e-12")),
    "casimir": float(os.getenv("COVHAM_TOL_CASIMIR", "1e-10")),
    "riemann": float(os.getenv("COVHAM_TOL_RIEMANN", "1e-10")),
    "christoffel": float(os.getenv("COVHAM_TOL_CHRISTOFFEL", "1e-9")),
    "hessian_symmetry": float(os.getenv("COVHAM_TOL_HESSIAN", "1e-9")),
}

# Seeded sampling of verification points
SAMPLING_SETTINGS = {
    "samples": int(os.getenv("COVHAM_SAMPLES", "100")),
    "seed": int(os.getenv("COVHAM_SEED", "20240601")),
    "box_half_width": float(os.getenv("COVHAM_BOX_HALF_WIDTH", "1.0")),
    "workers": int(os.getenv("COVHAM_WORKERS", "4")),
}

INTEGRATOR_SETTINGS = {
    "method": "rk4",
    "dt": float(os.getenv("COVHAM_DT", "1e-3")),
    "t_end": float(os.getenv("COVHAM_T_END", "1.0")),
}

NEWTON_SETTINGS = {
    "tol": float(os.getenv("COVHAM_NEWTON_TOL", "1e-12")),
    "max_iter": int(os.getenv("COVHAM_NEWTON_MAX_ITER", "50")),
    "max_halvings": 20,       # step halvings per iteration before giving up on descent
    "det_threshold": 1e-12,   # |det J| below this counts as degenerate
}

LOGGING_SETTINGS = {
    "level": os.getenv("COVHAM_LOG_LEVEL", "WARNING"),
    "format": "%(asctime)s - %(levelname)s - %(message)s",
}

EXPORT_SETTINGS = {
    "significant_digits": 17,
    "line_terminator": "\n",
}

_SECTIONS = {
    "tolerances": TOLERANCES,
    "sampling": SAMPLING_SETTINGS,
    "integrator": INTEGRATOR_SETTINGS,
    "newton": NEWTON_SETTINGS,
    "logging": LOGGING_SETTINGS,
    "export": EXPORT_SETTINGS,
}


def get_tolerance(name: str, overrides: Optional[Dict[str, float]] = None) -> float:
    """Get a tolerance, preferring a per-run override when one is given."""
    if overrides and name in overrides:
        return float(overrides[name])
    if name not in TOLERANCES:
        raise KeyError(f"unknown tolerance '{name}'")
    return TOLERANCES[name]


def get_setting(section: str, key: str) -> Any:
    """Get a single configuration value."""
    return _SECTIONS[section][key]
