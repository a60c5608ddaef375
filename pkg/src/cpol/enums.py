import enum


class GeometryMode(enum.Enum):
    IDEAL = "ideal"
    REALISTIC = "realistic"


class PrescatterArm(enum.Enum):
    A = "a"
    B = "b"
    NONE = "none"
    RANDOM = "random"


class FitMethod(enum.Enum):
    DIRECT = "direct"
    CHSH = "chsh"


class OutputFormat(enum.Enum):
    JSONL = "jsonl"
    CSV = "csv"


class ScatterDirection(enum.Enum):
    """Azimuth convention between the two final scattering planes.

    Forward pre-scattering adds the arm azimuths, backscattering takes
    their difference so the basis keeps its orientation.
    """

    FORWARD = "forward"
    BACKWARD = "backward"


class EventTag(enum.Enum):
    DIRECT = "Direct"
    PRE_SCATTERED = "PreScattered"
    BACKSCATTER = "Backscatter"
    REJECTED = "Rejected"


class Arm(enum.IntEnum):
    """Truth label of the arm that interacted in its pre-scatterer."""

    NONE = 0
    A = 1
    B = 2
    BOTH = 3


class ExitCode(enum.IntEnum):
    OK = 0
    CONFIG = 2
    IO = 3
    VERSION = 4
    ORACLE = 5
