"""Exception types raised by the package."""


class GammaFilmError(Exception):
    """Base class for all package errors."""


class NotTwoWellCompatible(GammaFilmError):
    """The in-plane parts of the wells are not rank-one connected."""


class DegenerateGrid(GammaFilmError):
    """A grid has too few cells for the requested operator."""


class RegionOutsideDomain(GammaFilmError):
    """An integration region is not a grid-aligned box inside the domain."""


class NonConvergence(GammaFilmError):
    """An optimizer hit its iteration cap above the optimality tolerance."""


class IncompatibleWells(GammaFilmError):
    """The wells do not have the structure required by an operation."""


class ScheduleTooShort(GammaFilmError):
    """A convergence diagnostic needs at least three schedule entries."""


class LayersOverlap(GammaFilmError):
    """Two transition layers of a recovery construction intersect."""


class LayerOutsideDomain(GammaFilmError):
    """A transition layer leaves the mid-surface."""


class TubeTooNarrow(GammaFilmError):
    """The tubular neighbourhood of a level set is thinner than the layer."""


class LineSearchFailure(GammaFilmError):
    """Backtracking could not find a decreasing step."""


class SquaresTooFew(GammaFilmError):
    """The rigidity partition has fewer than four squares per side."""


class ConfigInvalid(GammaFilmError):
    """An experiment configuration is malformed or inconsistent."""


class MissingArtifact(GammaFilmError):
    """A plot was requested for data the summary does not contain."""
