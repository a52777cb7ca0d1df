"""Condition grids of the replicated experiments, the threshold runner and scoring.

An :class:`ExperimentSpec` describes one threshold curve (one series of a
published panel, e.g. SDN thresholds for an S_pi target).  Named panels are
groups of such series; see :data:`GROUPS`.

Thresholds are target levels in dB relative to the masker power in the
on-frequency channel (a channel signal-to-noise ratio).
"""
from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .decision import TaskSpec, dprime_at_threshold
from .errors import AlignmentError, ConfigurationError, ModelError
from .model import TABLE1, ConditionModel, ModelParams, Simulation
from .stimuli import MaskerKind, MaskerSpec, TargetSpec

log = logging.getLogger(__name__)

LEVEL_CONVENTION = "threshold_db = target power re masker power in the 500-Hz channel (dB)"

ITD_VARIABLE = "itd_ms"
BANDWIDTH_VARIABLE = "inner_bandwidth_hz"

MASKER_BAND = (50.0, 950.0)
VDH_ITDS_MS = tuple(np.round(np.arange(33) * 0.125, 3))
MARQUARDT_BANDWIDTHS = (0.0, 100.0, 200.0, 400.0, 900.0)
KOLARIK_BANDWIDTHS = (0.0, 25.0, 50.0, 100.0, 200.0, 400.0, 900.0)

TASK_707 = TaskSpec(2, 0.707)
TASK_794 = TaskSpec(2, 0.794)


@dataclass(frozen=True)
class Condition:
    swept_value: float
    masker: MaskerSpec
    target: TargetSpec


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    variable: str
    conditions: tuple[Condition, ...]
    task: TaskSpec
    params: ModelParams
    sim: Simulation = field(default_factory=Simulation)
    relative_to: float | None = None

    def __post_init__(self):
        if not self.conditions:
            raise ConfigurationError("experiment has no conditions")
        values = [c.swept_value for c in self.conditions]
        if len(set(values)) != len(values):
            raise ConfigurationError("swept values must be unique")
        if self.relative_to is not None and self.relative_to not in values:
            raise ConfigurationError("reference condition missing from the grid")

    @property
    def swept_values(self) -> np.ndarray:
        return np.array([c.swept_value for c in self.conditions])


@dataclass
class ThresholdCurve:
    name: str
    variable: str
    swept: np.ndarray
    thresholds: np.ndarray
    ablation: np.ndarray
    flags: list[str]
    metadata: dict

    def rows(self):
        for x, t, a, f in zip(self.swept, self.thresholds, self.ablation, self.flags):
            yield float(x), float(t), float(a), f


@dataclass(frozen=True)
class ReferenceDataset:
    swept: np.ndarray
    thresholds: np.ndarray
    label: str = ""

    def __post_init__(self):
        if len(self.swept) != len(self.thresholds):
            raise AlignmentError("swept values and thresholds differ in length")


@dataclass(frozen=True)
class Score:
    r2: float
    rmse: float
    offset: float = 0.0
    n: int = 0


# --- condition grids ------------------------------------------------------

def _vdh(signal: str, kind: str, sim: Simulation, itds=VDH_ITDS_MS) -> ExperimentSpec:
    ipd = np.pi if signal == "spi" else 0.0
    conds = tuple(Condition(float(itd), MaskerSpec(kind, MASKER_BAND, itd=itd * 1e-3), TargetSpec(ipd=ipd))
                  for itd in itds)
    return ExperimentSpec(f"vdh1999-{signal}-{kind.lower()}", ITD_VARIABLE, conds, TASK_707,
                          TABLE1[f"vdh1999-{signal}"], sim)


FLANKS = {"pm": (np.pi / 2, -np.pi / 2), "mp": (-np.pi / 2, np.pi / 2)}


def _inner(bw: float) -> tuple[float, float]:
    return (500.0 - bw / 2, 500.0 + bw / 2)


def _marquardt(inner: str, flanks: str, sim: Simulation, bandwidths=MARQUARDT_BANDWIDTHS) -> ExperimentSpec:
    conds = tuple(
        Condition(float(bw), MaskerSpec(MaskerKind.FLANKED, MASKER_BAND, itd=1e-3, inner_band=_inner(bw),
                                        flank_ipds=FLANKS[flanks], inner_kind=inner.upper()),
                  TargetSpec(ipd=0.0))
        for bw in bandwidths)
    return ExperimentSpec(f"marquardt2009-{inner}-{flanks}", BANDWIDTH_VARIABLE, conds, TASK_794,
                          TABLE1["marquardt2009"], sim)


def _kolarik(sim: Simulation, bandwidths=KOLARIK_BANDWIDTHS) -> ExperimentSpec:
    conds = tuple(
        Condition(float(bw), MaskerSpec(MaskerKind.FLANKED, MASKER_BAND, inner_band=_inner(bw),
                                        flank_ipds=(np.pi, np.pi), inner_kind=MaskerKind.DIOTIC),
                  TargetSpec(ipd=np.pi))
        for bw in bandwidths)
    return ExperimentSpec("kolarik2010", BANDWIDTH_VARIABLE, conds, TASK_707, TABLE1["kolarik2010"], sim,
                          relative_to=0.0)


EXPERIMENTS = {
    **{f"vdh1999-{s}-{k.lower()}": (lambda sim, s=s, k=k: _vdh(s, k, sim))
       for s in ("spi", "s0") for k in ("SDN", "ODN")},
    **{f"marquardt2009-{i}-{f}": (lambda sim, i=i, f=f: _marquardt(i, f, sim))
       for i in ("sdn", "odn") for f in FLANKS},
    "kolarik2010": _kolarik,
}

GROUPS = {
    "vdh1999-spi": ("vdh1999-spi-sdn", "vdh1999-spi-odn"),
    "vdh1999-s0": ("vdh1999-s0-sdn", "vdh1999-s0-odn"),
    "marquardt2009": tuple(f"marquardt2009-{i}-{f}" for i in ("sdn", "odn") for f in FLANKS),
}


def named_experiments(name: str, sim: Simulation | None = None) -> list[ExperimentSpec]:
    """Experiment series for a single-series name or a panel group name."""
    sim = sim or Simulation()
    if name in GROUPS:
        return [EXPERIMENTS[n](sim) for n in GROUPS[name]]
    if name in EXPERIMENTS:
        return [EXPERIMENTS[name](sim)]
    raise KeyError(name)


# --- running --------------------------------------------------------------

def _metadata(spec: ExperimentSpec, target_dprime: float) -> dict:
    p, s = spec.params, spec.sim
    return {
        "experiment": spec.name,
        "swept_variable": spec.variable,
        "rho_hat": p.rho_hat, "sigma_b": p.sigma_b, "sigma_w": p.sigma_w, "sigma_m": p.sigma_m,
        "interference_enabled": p.interference_enabled,
        "task": f"{spec.task.n_alternatives}-AFC at {spec.task.percent_correct:.3f} correct",
        "target_dprime": round(target_dprime, 4),
        "seed": s.seed, "tokens": s.tokens, "paired_tokens": s.paired,
        "sample_rate_hz": s.sample_rate, "duration_s": s.duration, "backend": s.backend,
        "channels": len(s.grid), "level_convention": LEVEL_CONVENTION,
        "relative_to": spec.relative_to,
    }


def _thresholds_for(model: ConditionModel, params: ModelParams, target: float):
    try:
        est = model.threshold(params, target)
    except ModelError as exc:
        log.warning("no threshold: %s", exc)
        return math.nan, "no_threshold"
    return est.level, ("extrapolated" if est.extrapolated else "")


def run_experiment(spec: ExperimentSpec) -> ThresholdCurve:
    """Thresholds with the spec's parameters plus the single-channel ablation.

    Both columns come from the same noise tokens; only the pathway flag
    differs.  Conditions without a threshold are reported as NaN and flagged.
    """
    target = dprime_at_threshold(spec.task)
    main = spec.params
    ablated = spec.params.without_interference()
    thr, abl, flags = [], [], []
    for cond in spec.conditions:
        model = ConditionModel(cond.masker, cond.target, spec.sim)
        t, f1 = _thresholds_for(model, main, target)
        a, f2 = _thresholds_for(model, ablated, target)
        thr.append(t)
        abl.append(a)
        flags.append(";".join(sorted({f for f in (f1, f2) if f})))
    thr, abl = np.array(thr), np.array(abl)
    if spec.relative_to is not None:
        ref = spec.swept_values == spec.relative_to
        thr = thr - thr[ref][0]
        abl = abl - abl[ref][0]
    return ThresholdCurve(spec.name, spec.variable, spec.swept_values, thr, abl, flags,
                          _metadata(spec, target))


def run_ablation(spec: ExperimentSpec) -> ThresholdCurve:
    """As :func:`run_experiment` with the incoherence interference switched off."""
    return run_experiment(replace(spec, params=spec.params.without_interference()))


# --- scoring --------------------------------------------------------------

def load_reference(path, label: str | None = None) -> ReferenceDataset:
    """Read ``swept_value,threshold_db[,subject]``; subjects are averaged per swept value."""
    groups: dict[float, list[float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"swept_value", "threshold_db"} <= set(reader.fieldnames):
            raise ConfigurationError(f"{path}: header must contain swept_value and threshold_db")
        for row in reader:
            groups.setdefault(float(row["swept_value"]), []).append(float(row["threshold_db"]))
    swept = np.array(sorted(groups))
    thr = np.array([np.mean(groups[x]) for x in swept])
    return ReferenceDataset(swept, thr, label if label is not None else Path(path).stem)


def _aligned(curve: ThresholdCurve, ref: ReferenceDataset):
    model = dict(zip(np.round(curve.swept, 9), curve.thresholds))
    keys = np.round(ref.swept, 9)
    missing = [x for x in keys if x not in model]
    if missing:
        raise AlignmentError(f"reference values {missing} not on the model grid of {curve.name}")
    return np.array([model[x] for x in keys]), np.asarray(ref.thresholds, dtype=float)


def score(curve, ref, fit_offset: bool = False) -> Score:
    """Coefficient of determination and RMSE of model thresholds against data.

    ``curve`` and ``ref`` may be single objects or equal-length sequences, in
    which case all series are pooled.  With ``fit_offset`` one constant is
    added to the model to minimise the squared error before scoring.
    """
    curves = [curve] if isinstance(curve, ThresholdCurve) else list(curve)
    refs = [ref] if isinstance(ref, ReferenceDataset) else list(ref)
    if len(curves) != len(refs):
        raise AlignmentError("need one reference per curve")
    pairs = [_aligned(c, r) for c, r in zip(curves, refs)]
    pred = np.concatenate([p for p, _ in pairs])
    data = np.concatenate([d for _, d in pairs])
    ok = np.isfinite(pred)
    if not ok.any():
        raise AlignmentError("no finite model thresholds to score")
    pred, data = pred[ok], data[ok]
    offset = float(np.mean(data - pred)) if fit_offset else 0.0
    resid = data - (pred + offset)
    ss_tot = float(np.sum((data - data.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else math.nan
    return Score(r2, float(np.sqrt(np.mean(resid ** 2))), offset, int(ok.sum()))


# --- spec files -----------------------------------------------------------

_PI_EXPR = re.compile(r"^\s*(-?)\s*(\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?\s*$")


def parse_angle(text: str) -> float:
    """Radians from ``'1.57'``, ``'pi'``, ``'-pi/2'`` or ``'0.5*pi'``."""
    text = text.strip()
    m = _PI_EXPR.match(text)
    if m:
        sign = -1.0 if m.group(1) else 1.0
        coef = float(m.group(2)) if m.group(2) else 1.0
        div = float(m.group(3)) if m.group(3) else 1.0
        return sign * coef * np.pi / div
    return float(text)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def parse_spec_text(text: str, sim: Simulation | None = None) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from ``key = value`` lines.

    Keys: ``name``, ``masker`` (SDN, ODN or FlankedComposite), ``variable``
    (itd_ms or inner_bandwidth_hz), ``values``, ``itd_ms``, ``band``,
    ``inner_kind``, ``flank_ipds``, ``spectrum_level``, ``target_frequency``,
    ``target_ipd``, ``alternatives``, ``percent_correct``, ``params``
    (a preset name from ``TABLE1``) or ``rho_hat``/``sigma_b``/``sigma_w``/``sigma_m``,
    ``interference``, ``relative_to``.
    """
    kv = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        kv[key.lower()] = value
    try:
        variable = kv.get("variable", ITD_VARIABLE)
        if variable not in (ITD_VARIABLE, BANDWIDTH_VARIABLE):
            raise ConfigurationError(f"unknown swept variable {variable!r}")
        values = _floats(kv["values"])
        kind = MaskerKind(kv.get("masker", "SDN"))
        band = tuple(_floats(kv.get("band", "50, 950")))
        itd_ms = float(kv.get("itd_ms", 0.0))
        flank = tuple(parse_angle(a) for a in kv.get("flank_ipds", "0, 0").split(","))
        inner_kind = MaskerKind(kv.get("inner_kind", "Diotic"))
        level = float(kv.get("spectrum_level", 0.0))
        target_base = TargetSpec(float(kv.get("target_frequency", 500.0)), parse_angle(kv.get("target_ipd", "0")))
        if "params" in kv:
            params = TABLE1[kv["params"]]
        else:
            params = ModelParams(float(kv["rho_hat"]), float(kv["sigma_b"]), float(kv["sigma_w"]),
                                 float(kv["sigma_m"]))
        if kv.get("interference", "on").lower() in ("off", "false", "0", "no"):
            params = params.without_interference()
        task = TaskSpec(int(kv.get("alternatives", 2)), float(kv.get("percent_correct", 0.707)))
    except KeyError as exc:
        raise ConfigurationError(f"missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None

    conds = []
    for v in values:
        if variable == ITD_VARIABLE:
            itd, inner = v * 1e-3, None
        else:
            itd, inner = itd_ms * 1e-3, (target_base.frequency - v / 2, target_base.frequency + v / 2)
        if (kind is MaskerKind.FLANKED) != (inner is not None):
            raise ConfigurationError("flanked maskers sweep inner_bandwidth_hz; other maskers sweep itd_ms")
        masker = MaskerSpec(kind, band, itd=itd, inner_band=inner if kind is MaskerKind.FLANKED else None,
                            flank_ipds=flank, inner_kind=inner_kind, spectrum_level=level)
        conds.append(Condition(v, masker, target_base))
    relative = kv.get("relative_to")
    return ExperimentSpec(kv.get("name", "custom"), variable, tuple(conds), task, params,
                          sim or Simulation(), float(relative) if relative is not None else None)


def load_spec(path, sim: Simulation | None = None) -> ExperimentSpec:
    return parse_spec_text(Path(path).read_text(encoding="utf-8"), sim)
