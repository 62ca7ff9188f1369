"""
System utilities for the DS-II simulator.
"""
import platform
from typing import Dict

import numpy as np
import scipy

try:
    import psutil
    PSUTIL_AVAILABLE = True
except ImportError:
    PSUTIL_AVAILABLE = False

from .display import print_status

# Arrays held per grid point by one Picard step: node values, propagators,
# nonlinear terms and quadrature scratch, all complex128.
_ARRAYS_PER_NODE = 6
_BYTES_PER_VALUE = 16


def get_system_info() -> Dict[str, str]:
    """Get platform and numerical-library information.

    Returns:
        Dictionary of stable platform facts (no load-dependent values)
    """
    info = {
        'system': platform.system(),
        'architecture': platform.machine(),
        'python_version': platform.python_version(),
        'numpy_version': np.__version__,
        'scipy_version': scipy.__version__,
    }
    if PSUTIL_AVAILABLE:
        info['physical_cores'] = str(psutil.cpu_count(logical=False) or 1)
    return info


def default_worker_count() -> int:
    """Number of worker processes for sweeps: physical cores when known."""
    if PSUTIL_AVAILABLE:
        return max(1, psutil.cpu_count(logical=False) or psutil.cpu_count() or 1)
    return 1


def estimate_step_memory(grid_size: int, quad_nodes: int) -> int:
    """Rough peak bytes of one Picard step."""
    return grid_size * quad_nodes * _ARRAYS_PER_NODE * _BYTES_PER_VALUE


def check_memory(grid_size: int, quad_nodes: int, workers: int = 1) -> bool:
    """Warn when the planned run may not fit in available memory.

    Returns:
        True if the estimate fits (or cannot be checked), False otherwise
    """
    if not PSUTIL_AVAILABLE:
        return True
    needed = estimate_step_memory(grid_size, quad_nodes) * max(1, workers)
    available = psutil.virtual_memory().available
    if needed > available:
        print_status(
            f"Estimated {needed / 1024 ** 3:.2f} GB needed per step batch, "
            f"only {available / 1024 ** 3:.2f} GB available",
            "warning",
        )
        return False
    return True
