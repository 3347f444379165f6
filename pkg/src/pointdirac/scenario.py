"""Scenario files: one TOML document describing constants, model, datum, run.

Example:

    seed = 12345

    [constants]
    hbar = 1.0
    c = 1.0
    m = 1.0
    y = 0.0

    [model]
    family = "gross_neveu"
    params = []

    [datum]
    profile = "gaussian"          # gaussian | sech | bump | file
    x0 = 0.0
    width = 1.0
    weights = [[1.0, 0.0], [0.0, 0.0]]   # spinor weights, [re, im] pairs
    # path = "samples.csv"        # for profile = "file"

    [run]
    T = 1.0
    dt = 1e-3
    snapshot_times = [0.0, 0.5, 1.0]
    snapshot_grid = { min = -5.0, max = 5.0, points = 401 }
    conservation_times = 11       # count, or an explicit list of times
    window = 0.0                  # 0 or absent -> automatic half-width
    energy = true                 # omit for automatic detection

    [checks]
    boundary_tol = 1e-6
    mass_drift_tol = 1e-4
    energy_drift_tol = 1e-3

    [output]
    dir = "out"

Numbers are parsed by the TOML reader at full double precision.  Config
errors name the offending dotted key.
"""

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .core import PhysicalConstants
from .models import builtin_model
from .profiles import bump_profile, gaussian_profile, profile_from_samples, sech_profile


class ScenarioError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


_REQUIRED = object()


def _get(table, key, path, kind=None, default=_REQUIRED):
    if key not in table:
        if default is _REQUIRED:
            raise ScenarioError(f"{path}.{key}" if path else key, "missing required field")
        return default
    val = table[key]
    if kind is not None:
        if kind is float and isinstance(val, bool):
            raise ScenarioError(f"{path}.{key}", "expected a number")
        if kind is float and isinstance(val, int):
            val = float(val)
        if not isinstance(val, kind):
            raise ScenarioError(
                f"{path}.{key}" if path else key,
                f"expected {kind.__name__}, got {type(val).__name__}",
            )
    return val


@dataclass(frozen=True)
class Scenario:
    constants: PhysicalConstants
    model_family: str
    model_params: tuple
    datum_profile: str
    datum_options: dict
    T: float
    dt: float
    snapshot_times: tuple
    snapshot_grid: tuple  # (min, max, points)
    conservation_times: object  # int count or tuple of times
    window: Optional[float]
    energy: Optional[bool]
    checks: dict
    output_dir: Optional[str]
    seed: int
    base_dir: str = "."

    def build_model(self):
        return builtin_model(self.model_family, list(self.model_params), self.constants)

    def build_regular_profile(self):
        y = self.constants.y
        opts = self.datum_options
        kind = self.datum_profile
        if kind == "file":
            path = opts["path"]
            if not os.path.isabs(path):
                path = os.path.join(self.base_dir, path)
            x, psi = read_profile_samples(path)
            return profile_from_samples(x, psi, y=y)
        weights = opts["weights"]
        args = dict(weights=weights, x0=opts["x0"], width=opts["width"], y=y)
        maker = {"gaussian": gaussian_profile, "sech": sech_profile,
                 "bump": bump_profile}[kind]
        return maker(**args)

    def time_nodes(self):
        n = int(round(self.T / self.dt))
        return np.arange(n + 1) * self.dt

    def snap_time(self, t):
        k = int(round(t / self.dt))
        k = min(max(k, 0), int(round(self.T / self.dt)))
        return k * self.dt

    def conservation_time_list(self):
        if isinstance(self.conservation_times, int):
            ts = np.linspace(0.0, self.T, self.conservation_times)
        else:
            ts = np.asarray(self.conservation_times, dtype=float)
        return np.array(sorted({self.snap_time(t) for t in ts}))


def _parse_weights(raw, path):
    if (not isinstance(raw, list) or len(raw) != 2
            or any(not isinstance(c, list) or len(c) != 2 for c in raw)):
        raise ScenarioError(path, "expected [[re, im], [re, im]]")
    try:
        return np.array([c[0] + 1j * c[1] for c in raw], dtype=complex)
    except TypeError:
        raise ScenarioError(path, "weight entries must be numbers") from None


def load_scenario(path):
    """Parse and validate a scenario file."""
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as err:
            raise ScenarioError("(file)", f"invalid TOML: {err}") from None

    cst = doc.get("constants", {})
    try:
        constants = PhysicalConstants(
            hbar=_get(cst, "hbar", "constants", float, 1.0),
            c=_get(cst, "c", "constants", float, 1.0),
            m=_get(cst, "m", "constants", float, 1.0),
            y=_get(cst, "y", "constants", float, 0.0),
        )
    except ValueError as err:
        raise ScenarioError("constants", str(err)) from None

    model = _get(doc, "model", "", dict)
    family = _get(model, "family", "model", str)
    params = _get(model, "params", "model", list, [])
    if any(isinstance(p, bool) or not isinstance(p, (int, float)) for p in params):
        raise ScenarioError("model.params", "parameters must be numbers")

    datum = _get(doc, "datum", "", dict)
    kind = _get(datum, "profile", "datum", str)
    if kind not in ("gaussian", "sech", "bump", "file"):
        raise ScenarioError("datum.profile", f"unknown profile {kind!r}")
    options = {}
    if kind == "file":
        options["path"] = _get(datum, "path", "datum", str)
    else:
        options["x0"] = _get(datum, "x0", "datum", float, 0.0)
        options["width"] = _get(datum, "width", "datum", float, 1.0)
        if options["width"] <= 0:
            raise ScenarioError("datum.width", "must be positive")
        options["weights"] = _parse_weights(
            _get(datum, "weights", "datum", list, [[1.0, 0.0], [0.0, 0.0]]),
            "datum.weights",
        )

    run = _get(doc, "run", "", dict)
    T = _get(run, "T", "run", float)
    dt = _get(run, "dt", "run", float)
    if dt <= 0.0:
        raise ScenarioError("run.dt", "must be positive")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ScenarioError("run.T", "must be a positive integer multiple of run.dt")
    snap_times = _get(run, "snapshot_times", "run", list, [])
    for t in snap_times:
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise ScenarioError("run.snapshot_times", "entries must be numbers")
        if t < 0.0 or t > T + 1e-12:
            raise ScenarioError("run.snapshot_times", f"time {t} outside [0, T]")
    grid = run.get("snapshot_grid", {})
    gmin = _get(grid, "min", "run.snapshot_grid", float, constants.y - 10.0)
    gmax = _get(grid, "max", "run.snapshot_grid", float, constants.y + 10.0)
    gpts = _get(grid, "points", "run.snapshot_grid", int, 401)
    if gmax <= gmin or gpts < 2:
        raise ScenarioError("run.snapshot_grid", "need min < max and points >= 2")
    cons = run.get("conservation_times", 11)
    if isinstance(cons, list):
        for t in cons:
            if isinstance(t, bool) or not isinstance(t, (int, float)):
                raise ScenarioError("run.conservation_times", "entries must be numbers")
            if t < 0.0 or t > T + 1e-12:
                raise ScenarioError("run.conservation_times", f"time {t} outside [0, T]")
        cons = tuple(float(t) for t in cons)
    elif isinstance(cons, bool) or not isinstance(cons, int):
        raise ScenarioError("run.conservation_times", "expected a count or a list")
    elif cons < 2:
        raise ScenarioError("run.conservation_times", "need at least 2 sample times")
    window = _get(run, "window", "run", float, 0.0)
    if window < 0.0:
        raise ScenarioError("run.window", "must be nonnegative (0 = automatic)")
    energy_flag = run.get("energy", None)
    if energy_flag is not None and not isinstance(energy_flag, bool):
        raise ScenarioError("run.energy", "expected true/false")
    if energy_flag and constants.m == 0.0:
        raise ScenarioError("run.energy", "energy diagnostics require m > 0")

    checks_tbl = doc.get("checks", {})
    checks = {
        "boundary_tol": _get(checks_tbl, "boundary_tol", "checks", float, 1e-6),
        "mass_drift_tol": _get(checks_tbl, "mass_drift_tol", "checks", float, 1e-4),
        "energy_drift_tol": _get(checks_tbl, "energy_drift_tol", "checks", float, 1e-3),
    }

    output = doc.get("output", {})
    out_dir = _get(output, "dir", "output", str, None)

    seed = _get(doc, "seed", "", int, 0)

    scenario = Scenario(
        constants=constants,
        model_family=family,
        model_params=tuple(float(p) for p in params),
        datum_profile=kind,
        datum_options=options,
        T=float(T),
        dt=float(dt),
        snapshot_times=tuple(float(t) for t in snap_times),
        snapshot_grid=(float(gmin), float(gmax), int(gpts)),
        conservation_times=cons,
        window=None if window == 0.0 else float(window),
        energy=energy_flag,
        checks=checks,
        output_dir=out_dir,
        seed=int(seed),
        base_dir=os.path.dirname(os.path.abspath(path)),
    )
    try:
        scenario.build_model()
    except ValueError as err:
        raise ScenarioError("model", str(err)) from None
    return scenario


# ---------------------------------------------------------------------------
# deterministic text artifacts (17 significant digits: round-trip safe)


def fmt(v):
    return f"{float(v):.17g}"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else fmt(c) for c in row])


def read_profile_samples(path):
    """Read datum samples: CSV with columns x, re1, im1, re2, im2."""
    xs, vals = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            if not row or row[0].startswith("#"):
                continue
            if i == 0 and not _is_number(row[0]):
                continue  # header line
            if len(row) != 5:
                raise ScenarioError("datum.path", f"row {i + 1}: expected 5 columns")
            try:
                nums = [float(c) for c in row]
            except ValueError:
                raise ScenarioError("datum.path", f"row {i + 1}: non-numeric entry") from None
            xs.append(nums[0])
            vals.append([nums[1] + 1j * nums[2], nums[3] + 1j * nums[4]])
    if not xs:
        raise ScenarioError("datum.path", "no samples found")
    return np.array(xs), np.array(vals)


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False
