"""Seamless patch cloning between 360-degree equirectangular panoramas.

The toolkit clones a patch of one spherical panorama into another by
diffusing boundary color differences over a spherical membrane weighted
by spherical mean value coordinates, with orientation-preserving
placement and a splitting strategy for patches wider than 180 degrees.
"""

from . import engine, mesh, panorama, smvc, sphere, split
from .engine import (
    CloneSession,
    compute_membrane,
    load_session,
    planar_clone_baseline,
    preprocess,
    render_clone,
    save_session,
    serialize_session,
)
from .errors import (
    AntipodalBoundary,
    AspectError,
    DegenerateAngle,
    DegenerateAxis,
    DegeneratePolyline,
    FormatError,
    MaskOutOfBounds,
    NoIntersection,
    OutsidePatch,
    PanocloneError,
    PoleDatum,
    TriangulationFailure,
)
from .mesh import AdaptiveMesh, build_adaptive_mesh, sample_boundary
from .panorama import Panorama, load, sample_bilinear, save
from .smvc import (
    CoordinateDiagnostics,
    SphericalPolygon,
    diagnose,
    planar_mvc,
    point_in_polygon,
    smvc_direct,
    smvc_stereographic,
)
from .split import (
    SplitPlan,
    composed_coordinates,
    needs_split,
    split_path_median_azimuth,
    split_path_pca_projected,
    split_path_pca_sphere,
)

__version__ = "0.1.0"
