"""Exception hierarchy shared across the package.

Every error carries a stable ``code`` string so the CLI and the HTTP
service can map failures one-to-one without string matching.
"""


class PanocloneError(Exception):
    """Base class for all library errors."""

    code = "internal"


class DegenerateAngle(PanocloneError):
    """Signed angle undefined: one of the cross products is (near) zero."""

    code = "degenerate-angle"


class DegenerateAxis(PanocloneError):
    """Rotation axis undefined: the two directions are (anti)parallel."""

    code = "degenerate-axis"


class PoleDatum(PanocloneError):
    """Two-step rotation undefined: the datum point sits on a pole."""

    code = "pole-datum"


class FormatError(PanocloneError):
    """Image file could not be decoded as PNG or JPEG."""

    code = "format-error"


class AspectError(PanocloneError):
    """Raster is not 2:1 equirectangular."""

    code = "aspect-error"


class AntipodalBoundary(PanocloneError):
    """A boundary vertex is antipodal to the evaluation point.

    This is the overflow regime of large-patch coordinates; the caller
    should split the patch instead of evaluating directly.
    """

    code = "antipodal-boundary"

    def __init__(self, message, vertex_index=None):
        super().__init__(message)
        self.vertex_index = vertex_index


class DegeneratePolyline(PanocloneError):
    """Boundary polyline has fewer than 3 distinct vertices."""

    code = "degenerate-polyline"


class TriangulationFailure(PanocloneError):
    """Adaptive mesh construction failed for the given boundary."""

    code = "triangulation-failure"


class OutsidePatch(PanocloneError):
    """Query point does not lie inside the meshed patch."""

    code = "outside-patch"


class NoIntersection(PanocloneError):
    """Splitting great circle does not cross the patch boundary twice."""

    code = "no-intersection"


class MaskOutOfBounds(PanocloneError):
    """Planar-baseline mask leaves the image after applying the offset."""

    code = "mask-out-of-bounds"
