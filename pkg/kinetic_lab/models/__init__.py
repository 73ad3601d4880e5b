"""
Model initialization file for kinetic_lab.
This file imports the domain types so they can be used directly from kinetic_lab.models.
"""

from .grid import Boundary, Grid1D
from .state import ConservedField, ConservedState, KineticInterval, StateBounds
from .riemann import RiemannSolution, Wave, WaveKind
from .dissipation import DissipationField, EntropyKind, EntropyPair
from .record import RunAudit, SchemeConfig, SchemeKind, SpaceTimeRecord
from .curve import LipschitzCurve
from .characteristic import CharacteristicRun, MollifierKernel
from .reports import (
    BlowupFrame,
    DeGiorgiDirection,
    DeGiorgiReport,
    DichotomyLabel,
    DichotomyReport,
    EntropyAuditReport,
    EnvelopeLadder,
    JumpDensityReport,
    PairingEstimate,
    RescaledPatch,
    SemicontinuityPoint,
    SemicontinuityReport,
    TraceReport,
    TraceSide,
    TvBoundReport,
)
