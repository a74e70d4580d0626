"""Forward model of the spin-path interferometer.

The model works in the energy-compensated frame: RF flippers act as ideal
spin flips and beam-splitter phases are folded into the basis, so the
phase shifter ``chi`` multiplies path II by ``exp(i chi)``.

Two measurement contexts are modelled:

* ``joint_xx_yy`` - second flipper off, spin analysed in the x-y plane at
  Larmor phase ``alpha`` (pi/2 rotator + analyser) and path projected on
  ``(|I> + e^{i chi}|II>)/sqrt(2)``.  Detection probability of the prepared
  state is ``(1 - v cos(alpha - chi + offset)) / 4``.
* ``bell_discrimination`` - second flipper on.  With the DC rotator at pi the
  detector sees the projection onto ``(|down,I> + e^{i chi}|up,II>)/sqrt(2)``,
  with the rotator off onto ``(|up,I> + e^{i chi}|down,II>)/sqrt(2)``.

Imperfect contrast ``v`` is a mixed state.  In the joint context it is
``v |Psi><Psi| + (1 - v) I/4``.  In the Bell context it is
``p |Psi><Psi| + q D + (1 - v) I/4`` with ``D`` the path-dephased Bell state,
``p = v(1 + v)/2`` and ``q = v(1 - v)/2``; this gives fringe contrast ``v`` in
the rotator-pi channel and a flat ``(1 - v)/4`` floor in the rotator-off
channel, so both contexts report an expectation of ``-v``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from neutron_ks import algebra
from neutron_ks.algebra import DOWN, PATH_I, PATH_II, SQRT_HALF, UP, StateVector
from neutron_ks.errors import ConfigParse, PreparationUnavailable

ContextId = Literal["joint_xx_yy", "bell_discrimination"]
Rotator = Literal["off", "pi_half", "pi"]
Term = Literal["xx", "yy", "bell"]

ROTATORS = ("off", "pi_half", "pi")
DEFAULT_VISIBILITY = {"xx": 0.679, "yy": 0.682, "bell": 0.93}


@dataclass(frozen=True)
class InstrumentConfig:
    rf_flipper_I: bool = True
    rf_flipper_II: bool = False
    chi: float = 0.0
    alpha: float = 0.0
    dc_rotator: Rotator = "pi_half"
    visibility_xx: float = DEFAULT_VISIBILITY["xx"]
    visibility_yy: float = DEFAULT_VISIBILITY["yy"]
    visibility_bell: float = DEFAULT_VISIBILITY["bell"]
    phase_offset: float = 0.0
    background: float = 0.0

    def __post_init__(self):
        for name in ("visibility_xx", "visibility_yy", "visibility_bell"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("chi", "alpha", "phase_offset", "background"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.background < 0:
            raise ValueError("background must be >= 0")
        if self.dc_rotator not in ROTATORS:
            raise ValueError(f"dc_rotator must be one of {ROTATORS}")

    def visibility(self, term: Term) -> float:
        return {"xx": self.visibility_xx, "yy": self.visibility_yy, "bell": self.visibility_bell}[term]

    def with_visibility(self, v: float) -> InstrumentConfig:
        return replace(self, visibility_xx=v, visibility_yy=v, visibility_bell=v)

    # Plain-text key/value serialization --------------------------------

    def to_text(self) -> str:
        lines = []
        for file_key, attr in _FILE_KEYS.items():
            value = getattr(self, attr)
            if isinstance(value, bool):
                value = "on" if value else "off"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{file_key} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> InstrumentConfig:
        """Parse ``key = value`` lines; ``#`` starts a comment.

        Angles are radians unless suffixed with ``deg`` (``chi = 90deg``).
        """
        kwargs = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigParse(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _FILE_KEYS:
                raise ConfigParse(f"line {lineno}: unknown key {key!r}")
            attr = _FILE_KEYS[key]
            try:
                kwargs[attr] = _parse_value(attr, value)
            except ValueError as exc:
                raise ConfigParse(f"line {lineno}: {exc}") from None
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise ConfigParse(str(exc)) from None

    @classmethod
    def from_file(cls, path: str | Path) -> InstrumentConfig:
        return cls.from_text(Path(path).read_text())


_FILE_KEYS = {
    "flipper_I": "rf_flipper_I",
    "flipper_II": "rf_flipper_II",
    "chi": "chi",
    "alpha": "alpha",
    "rotator": "dc_rotator",
    "visibility_xx": "visibility_xx",
    "visibility_yy": "visibility_yy",
    "visibility_bell": "visibility_bell",
    "phase_offset": "phase_offset",
    "background": "background",
}
assert set(_FILE_KEYS.values()) == {f.name for f in fields(InstrumentConfig)}

_ANGLE_KEYS = {"chi", "alpha", "phase_offset"}
_ANGLE_RE = re.compile(r"^([-+0-9.eE]+)\s*(deg|rad)?$")


def _parse_value(attr: str, value: str):
    if attr in ("rf_flipper_I", "rf_flipper_II"):
        lowered = value.lower()
        if lowered in ("on", "true", "1", "yes"):
            return True
        if lowered in ("off", "false", "0", "no"):
            return False
        raise ValueError(f"{attr}: expected on/off, got {value!r}")
    if attr == "dc_rotator":
        if value not in ROTATORS:
            raise ValueError(f"rotator must be one of {ROTATORS}, got {value!r}")
        return value
    if attr in _ANGLE_KEYS:
        m = _ANGLE_RE.match(value)
        if not m:
            raise ValueError(f"{attr}: cannot parse angle {value!r}")
        number = float(m.group(1))
        return math.radians(number) if m.group(2) == "deg" else number
    return float(value)


@dataclass(frozen=True)
class MeasurementContext:
    """One chi scan: the settings held fixed while the phase shifter moves.

    ``extraction_chis`` are the phase settings at which the fitted fringe is
    read off to build the expectation value.
    """

    id: ContextId
    term: Term
    alpha: float
    rotator: Rotator

    def __post_init__(self):
        if self.id == "joint_xx_yy" and (self.term == "bell" or self.rotator != "pi_half"):
            raise ValueError("joint scans analyse spin in the x-y plane (rotator pi_half)")
        if self.id == "bell_discrimination" and (self.term != "bell" or self.rotator == "pi_half"):
            raise ValueError("Bell discrimination uses rotator 'pi' or 'off'")

    @property
    def flipper_II(self) -> bool:
        return self.id == "bell_discrimination"

    @property
    def extraction_chis(self) -> tuple[float, float]:
        if self.term == "xx":
            return (0.0, math.pi)
        if self.term == "yy":
            return (math.pi / 2, 3 * math.pi / 2)
        return (math.pi / 2, -math.pi / 2)

    @property
    def settings(self) -> tuple[tuple[float, float, str, bool], ...]:
        """(alpha, chi, rotator, flipper_II) of each required projection."""
        return tuple((self.alpha, c, self.rotator, self.flipper_II) for c in self.extraction_chis)


def standard_scans() -> tuple[MeasurementContext, ...]:
    """The six scans behind the three terms of the reduced inequality."""
    return (
        MeasurementContext("joint_xx_yy", "xx", 0.0, "pi_half"),
        MeasurementContext("joint_xx_yy", "xx", math.pi, "pi_half"),
        MeasurementContext("joint_xx_yy", "yy", math.pi / 2, "pi_half"),
        MeasurementContext("joint_xx_yy", "yy", 3 * math.pi / 2, "pi_half"),
        MeasurementContext("bell_discrimination", "bell", 0.0, "pi"),
        MeasurementContext("bell_discrimination", "bell", 0.0, "off"),
    )


# Projection states ------------------------------------------------------


def spin_analysis_state(alpha: float) -> np.ndarray:
    """Spin state selected at Larmor phase alpha: (|up> + e^{i alpha}|down>)/sqrt(2)."""
    return SQRT_HALF * (UP + np.exp(1j * alpha) * DOWN)


def path_state(chi: float) -> np.ndarray:
    return SQRT_HALF * (PATH_I + np.exp(1j * chi) * PATH_II)


def bell_projection_state(chi: float, rotator: Rotator) -> StateVector:
    """State selected by the Bell-discrimination setup at phase chi.

    rotator ``"pi"``: (|down,I> + e^{i chi}|up,II>)/sqrt(2);
    rotator ``"off"``: (|up,I> + e^{i chi}|down,II>)/sqrt(2).
    """
    if rotator == "pi":
        first, second = algebra.basis_state("down", "I"), algebra.basis_state("up", "II")
    elif rotator == "off":
        first, second = algebra.basis_state("up", "I"), algebra.basis_state("down", "II")
    else:
        raise ValueError(f"Bell discrimination needs rotator 'pi' or 'off', got {rotator!r}")
    return StateVector(SQRT_HALF * (first.amplitudes + np.exp(1j * chi) * second.amplitudes))


def projection_target(context: MeasurementContext, chi: float) -> StateVector:
    if context.id == "joint_xx_yy":
        return algebra.product_state(spin_analysis_state(context.alpha), path_state(chi))
    return bell_projection_state(chi, context.rotator)


# Preparation and noise ---------------------------------------------------


def prepare_state(config: InstrumentConfig) -> StateVector:
    if not config.rf_flipper_I:
        raise PreparationUnavailable("the entangled preparation needs the path-I flipper on")
    return algebra.bell_state()


def noisy_density_matrix(context_id: ContextId, visibility: float) -> np.ndarray:
    """Mixed state whose ideal projections reproduce the closed-form fringes."""
    _check_visibility(visibility)
    rho_bell = algebra.density_matrix(algebra.bell_state())
    white = np.eye(4) / 4
    if context_id == "joint_xx_yy":
        return visibility * rho_bell + (1 - visibility) * white
    if context_id == "bell_discrimination":
        dephased = np.diag(np.diag(rho_bell))
        p = visibility * (1 + visibility) / 2
        q = visibility * (1 - visibility) / 2
        return p * rho_bell + q * dephased + (1 - visibility) * white
    raise ValueError(f"unknown context {context_id!r}")


def _check_visibility(v: float) -> None:
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")


# Closed-form detection probabilities -------------------------------------


def joint_probability(alpha, chi, visibility: float, phase_offset: float = 0.0):
    """Probability of joint detection at spin phase alpha and path phase chi.

    Vectorizes over ``alpha`` and ``chi``.  The four settings
    (alpha, chi), (alpha+pi, chi), (alpha, chi+pi), (alpha+pi, chi+pi)
    sum to one.
    """
    _check_visibility(visibility)
    p = (1.0 - visibility * np.cos(np.subtract(alpha, chi) + phase_offset)) / 4.0
    return float(p) if np.ndim(p) == 0 else p


def bell_discrimination_probability(
    chi,
    rotator: Rotator,
    visibility: float,
    phase_offset: float = 0.0,
    background: float = 0.0,
):
    """Probability of detection in the Bell-discrimination context.

    rotator ``"pi"`` gives ``(1 + v)(1 - v cos(chi + offset))/4`` whose
    readings at chi = +pi/2 and -pi/2 are the two ``varphi`` outcomes;
    rotator ``"off"`` gives the flat ``(1 - v)/4`` floor plus ``background``.
    """
    _check_visibility(visibility)
    chi = np.asarray(chi, dtype=float)
    if rotator == "pi":
        p = (1 + visibility) * (1 - visibility * np.cos(chi + phase_offset)) / 4.0
    elif rotator == "off":
        p = np.full_like(chi, (1 - visibility) / 4.0 + background)
    else:
        raise ValueError(f"Bell discrimination needs rotator 'pi' or 'off', got {rotator!r}")
    return float(p) if p.ndim == 0 else p


def scan_probability(
    context: MeasurementContext,
    chi,
    config: InstrumentConfig,
    state: StateVector | None = None,
):
    """Detection probability along a scan.

    With ``state=None`` the prepared (noisy Bell) state is used via the
    closed forms.  Passing ``state`` instead evaluates exact projections of
    that pure state, ignoring visibility; this is the hook for separable or
    otherwise non-standard preparations.
    """
    if state is not None:
        chis = np.atleast_1d(np.asarray(chi, dtype=float))
        p = np.array([algebra.projection_probability(projection_target(context, c), state) for c in chis])
        return float(p[0]) if np.ndim(chi) == 0 else p
    prepare_state(config)
    v = config.visibility(context.term)
    if context.id == "joint_xx_yy":
        return joint_probability(context.alpha, chi, v, config.phase_offset)
    return bell_discrimination_probability(chi, context.rotator, v, config.phase_offset, config.background)


def setting_probability(config: InstrumentConfig) -> float:
    """Probability for the single setting stored in ``config``.

    The joint-context visibility is taken from whichever of the x or y terms
    the Larmor phase is closer to.
    """
    if config.rf_flipper_II:
        ctx = MeasurementContext("bell_discrimination", "bell", config.alpha, config.dc_rotator)
    else:
        term = "xx" if abs(math.cos(config.alpha)) >= abs(math.sin(config.alpha)) else "yy"
        ctx = MeasurementContext("joint_xx_yy", term, config.alpha, config.dc_rotator)
    return scan_probability(ctx, config.chi, config)


def fringe_curve(
    context: MeasurementContext,
    chi_grid: Sequence[float],
    config: InstrumentConfig,
    state: StateVector | None = None,
) -> list[tuple[float, float]]:
    """Noise-free (chi, detection probability) pairs along a scan."""
    chis = np.asarray(chi_grid, dtype=float)
    if chis.size == 0:
        raise ValueError("chi_grid must not be empty")
    p = np.broadcast_to(scan_probability(context, chis, config, state), chis.shape)
    return [(float(c), float(r)) for c, r in zip(chis, p)]
