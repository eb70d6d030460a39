"""1D chemotaxis null-control toolkit (pybind11 bindings)."""

try:
    from ._kscontrol import *  # noqa: F401,F403  (installed layout)
except ImportError:
    from _kscontrol import *  # noqa: F401,F403  (build-tree layout)
