"""photonfluid: Bogoliubov theory and Lugiato-Lefever dynamics of the
2D photon fluid in a Kerr-filled Fabry-Perot cavity."""

__version__ = "0.1.0"

from . import experiments, meanfield, solver, theory  # noqa: F401
from .grids import ComplexField, GridSpec  # noqa: F401
