"""3D multi-object tracking by detection.

Geometry (rotated-box IoU/GIoU, NMS), Kalman filtering, association
(Hungarian / greedy over gated cost matrices), built-in config profiles, and
file-based runners for the full pipeline (track / evaluate / simulate).
"""

try:
    from . import _simpletrack as _core  # installed wheel layout
except ImportError:  # build-tree layout: extension on sys.path
    import _simpletrack as _core

globals().update({k: v for k, v in vars(_core).items() if not k.startswith("_")})

__version__ = "0.1.0"
__all__ = sorted(k for k in vars(_core) if not k.startswith("_"))
del _core
