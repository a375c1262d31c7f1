"""
Scanner package: image grid, parallel-beam geometry and the Siddon system matrix.
"""

from petrecon.scanner.types import ImageGrid, ScannerGeometry
from petrecon.scanner.siddon import trace_ray, trace_angle
from petrecon.scanner.projector import SystemMatrix, build_system_matrix, forward_project, back_project

__all__ = [
    "ImageGrid",
    "ScannerGeometry",
    "SystemMatrix",
    "build_system_matrix",
    "forward_project",
    "back_project",
    "trace_ray",
    "trace_angle",
]
