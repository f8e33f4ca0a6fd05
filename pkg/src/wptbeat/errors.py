"""Exception types shared across the package."""


class WptBeatError(Exception):
    """Base class for all package-specific errors."""


class RationalizationFailure(WptBeatError):
    """The two fundamentals cannot be placed on a common integer grid."""


class NonRealResult(WptBeatError):
    """Waveform reconstruction left a non-negligible imaginary residue."""


class IndexOutOfGrid(WptBeatError):
    """Requested harmonic index lies outside the truncated grid."""


class SingularSystem(WptBeatError):
    """The assembled harmonic system is numerically singular."""


class NoConvergence(WptBeatError):
    """Time-domain integration did not reach periodic steady state."""


class UnstableLoop(WptBeatError):
    """Closed-loop duty saturated at a bound for too many periods."""


class WindowMismatch(WptBeatError):
    """Capture window is not an integer number of base periods."""


class NoCrossover(WptBeatError):
    """Loop gain never crosses unity in the scanned band."""


class NoResonance(WptBeatError):
    """Denominator magnitude is monotone; no interior resonance found."""


class ZeroBeatFrequency(WptBeatError):
    """A beat-frequency design rule was asked for with f1 == f2."""
