"""Ground-truth engine: direct integration of the Schrodinger equation,
high-frequency averaging, amplitude extraction and resonance sweeps.

The integrator is an embedded adaptive Runge-Kutta 5(4) pair on the
two complex state amplitudes, stepped in the lab frame by default (the
rotating frame is available as a cross-check). Step size is error
controlled and additionally capped at a twentieth of the HF period so
the fast drive is never aliased.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import analytic
from .model import TWO_PI, DriveParams
from .su2 import Spinor

VALUE_SLACK = 1e-9
_TOL_RANGE = (1e-12, 1e-6)
_RENORM_THRESHOLD = 1e-10
_NORM_FAILURE = 1e-6
OMEGA_FLOOR = 1e-3  # sweep horizon guard for vanishing slow frequency


class IntegratorFailureError(RuntimeError):
    """State norm drifted beyond recovery between renormalizations."""


class StiffnessError(RuntimeError):
    """Step size underflowed; the problem is stiffer than this pair handles."""


class InsufficientSpanError(ValueError):
    """Series too short for a well-defined amplitude; message states the needed t_end."""


class SweepPointError(RuntimeError):
    """A sweep grid point failed; carries the offending omega_par."""

    def __init__(self, omega_par: float, cause: BaseException):
        super().__init__(f"sweep point omega_par = {omega_par!r} failed: {cause}")
        self.omega_par = omega_par
        self.cause = cause


@dataclass(frozen=True)
class TimeSeries:
    """Sampled (t, <sigma_z>) trace with provenance."""

    times: np.ndarray
    values: np.ndarray
    method: str
    params: DriveParams
    norm_drift: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.ndim != 1 or t.size != v.size:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if t.size < 1:
            raise ValueError("series must contain at least one sample")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise ValueError("times must be strictly increasing")
        if v.size and (v.min() < -1.0 - VALUE_SLACK or v.max() > 1.0 + VALUE_SLACK):
            raise ValueError("values outside [-1, 1] beyond tolerance")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.times.size)

    def to_csv(self, fp) -> None:
        fp.write("t,value\n")
        for t, v in zip(self.times, self.values):
            fp.write(f"{t:.12e},{v:.12e}\n")

    def to_json_dict(self) -> dict:
        return {
            "schema": "spinhf/timeseries/1",
            "method": self.method,
            "params": self.params.to_json_dict(),
            "norm_drift": self.norm_drift,
            "t": [float(x) for x in self.times],
            "value": [float(x) for x in self.values],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "TimeSeries":
        if data.get("schema") != "spinhf/timeseries/1":
            raise ValueError(f"unsupported schema {data.get('schema')!r}")
        return TimeSeries(
            times=np.array(data["t"], dtype=float),
            values=np.array(data["value"], dtype=float),
            method=str(data["method"]),
            params=DriveParams.from_json_dict(data["params"]),
            norm_drift=float(data.get("norm_drift", 0.0)),
        )


@dataclass(frozen=True)
class SweepResult:
    """Resonance-amplitude curves per method over an omega_par grid.

    Failed grid points hold NaN in the affected column and are listed in
    failures as (omega_par, method, message) triples.
    """

    omega_par_grid: np.ndarray
    amplitudes: dict[str, np.ndarray]
    params: DriveParams
    failures: tuple = ()

    def __post_init__(self):
        g = np.asarray(self.omega_par_grid, dtype=float)
        if g.ndim != 1 or g.size < 1:
            raise ValueError("grid must be a nonempty 1-D array")
        if g.size > 1 and not np.all(np.diff(g) > 0.0):
            raise ValueError("grid must be strictly increasing")
        amps = {}
        for name, arr in self.amplitudes.items():
            a = np.asarray(arr, dtype=float)
            if a.shape != g.shape:
                raise ValueError(f"amplitude column {name!r} length mismatch")
            finite = a[np.isfinite(a)]
            if finite.size and (finite.min() < 0.0 or finite.max() > 1.0 + 1e-6):
                raise ValueError(f"amplitudes for {name!r} outside [0, 1]")
            a.flags.writeable = False
            amps[name] = a
        g.flags.writeable = False
        object.__setattr__(self, "omega_par_grid", g)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(
            self,
            "failures",
            tuple((float(w), str(m), str(msg)) for w, m, msg in self.failures),
        )

    def to_csv(self, fp) -> None:
        names = list(self.amplitudes)
        fp.write("omega_par," + ",".join(names) + "\n")
        for i, w in enumerate(self.omega_par_grid):
            row = [f"{w:.12e}"]
            for name in names:
                a = self.amplitudes[name][i]
                row.append(f"{a:.12e}" if math.isfinite(a) else "")
            fp.write(",".join(row) + "\n")

    def to_json_dict(self) -> dict:
        return {
            "schema": "spinhf/sweep/1",
            "params": self.params.to_json_dict(),
            "omega_par": [float(x) for x in self.omega_par_grid],
            "amplitudes": {
                k: [float(x) if math.isfinite(x) else None for x in v]
                for k, v in self.amplitudes.items()
            },
            "failures": [list(f) for f in self.failures],
        }


# ---------------------------------------------------------------------------
# Adaptive RK 5(4) integration

# Dormand-Prince tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_A71, _A73, _A74, _A75, _A76 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


def _rhs_lab(p: DriveParams) -> Callable:
    half_perp = 0.5 * p.omega_perp
    opar = p.omega_par
    whf = p.omega_hf
    ohf = p.Omega_HF
    phi = p.phi_hf
    cos, sin = math.cos, math.sin

    def rhs(t: float, u: complex, d: complex):
        hx = -half_perp * cos(t)
        hy = -half_perp * sin(t)
        hz = -0.5 * (opar + whf * cos(ohf * t + phi))
        hm = complex(hx, -hy)
        return -1j * (hz * u + hm * d), -1j * (hm.conjugate() * u - hz * d)

    return rhs


def _rhs_transformed(p: DriveParams) -> Callable:
    # Rotating-frame generator evaluated at t0 = Omega_HF t; note the
    # caller must supply the frame-rotated initial state.
    half_perp = 0.5 * p.omega_perp
    hz = -0.5 * (1.0 + p.omega_par)
    r = p.r
    ohf = p.Omega_HF
    phi = p.phi_hf
    cos, sin = math.cos, math.sin

    def rhs(t: float, u: complex, d: complex):
        th = r * sin(ohf * t + phi)
        hm = complex(-half_perp * cos(th), half_perp * sin(th))
        return -1j * (hz * u + hm * d), -1j * (hm.conjugate() * u - hz * d)

    return rhs


def default_sample_dt(p: DriveParams) -> float:
    return (TWO_PI / p.Omega_HF) / 32.0


def integrate_schrodinger(
    p: DriveParams,
    init: Spinor,
    t_end: float,
    sample_dt: Optional[float] = None,
    tol: float = 1e-8,
    frame: str = "lab",
) -> tuple[TimeSeries, Spinor]:
    """Integrate i dpsi/dt = H(t) psi from t = 0 and sample <sigma_z>.

    Samples are recorded at exact multiples of sample_dt (default: a
    thirty-second of the HF period). Returns the series and the final
    state. The state is projected back onto the unit sphere after every
    accepted step; deviations beyond 1e-10 are accumulated into the
    series' norm_drift diagnostic (a nonzero value signals the error
    control is not holding).
    """
    if not t_end > 0.0:
        raise ValueError(f"t_end must be > 0, got {t_end!r}")
    if not _TOL_RANGE[0] <= tol <= _TOL_RANGE[1]:
        raise ValueError(f"tol {tol!r} outside supported range {_TOL_RANGE}")
    if frame == "lab":
        rhs = _rhs_lab(p)
    elif frame == "transformed":
        rhs = _rhs_transformed(p)
    else:
        raise ValueError(f"unknown frame {frame!r}")
    if sample_dt is None:
        sample_dt = default_sample_dt(p)
    if not sample_dt > 0.0:
        raise ValueError(f"sample_dt must be > 0, got {sample_dt!r}")

    h_max = (TWO_PI / p.Omega_HF) / 20.0
    u = complex(init.up)
    d = complex(init.down)
    t = 0.0
    drift = 0.0
    times = [0.0]
    values = [(u.real * u.real + u.imag * u.imag) - (d.real * d.real + d.imag * d.imag)]
    next_k = 1
    next_sample = sample_dt

    k1u, k1d = rhs(t, u, d)
    h = min(h_max, sample_dt)
    abs_ = abs

    while t < t_end:
        target = next_sample if next_sample < t_end else t_end
        clipped = t + h >= target
        h_try = (target - t) if clipped else h

        # Dormand-Prince stages (k7 = FSAL)
        yu = u + h_try * (_A21 * k1u)
        yd = d + h_try * (_A21 * k1d)
        k2u, k2d = rhs(t + _C2 * h_try, yu, yd)
        yu = u + h_try * (_A31 * k1u + _A32 * k2u)
        yd = d + h_try * (_A31 * k1d + _A32 * k2d)
        k3u, k3d = rhs(t + _C3 * h_try, yu, yd)
        yu = u + h_try * (_A41 * k1u + _A42 * k2u + _A43 * k3u)
        yd = d + h_try * (_A41 * k1d + _A42 * k2d + _A43 * k3d)
        k4u, k4d = rhs(t + _C4 * h_try, yu, yd)
        yu = u + h_try * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u)
        yd = d + h_try * (_A51 * k1d + _A52 * k2d + _A53 * k3d + _A54 * k4d)
        k5u, k5d = rhs(t + _C5 * h_try, yu, yd)
        yu = u + h_try * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u)
        yd = d + h_try * (_A61 * k1d + _A62 * k2d + _A63 * k3d + _A64 * k4d + _A65 * k5d)
        k6u, k6d = rhs(t + h_try, yu, yd)
        nu = u + h_try * (_A71 * k1u + _A73 * k3u + _A74 * k4u + _A75 * k5u + _A76 * k6u)
        nd = d + h_try * (_A71 * k1d + _A73 * k3d + _A74 * k4d + _A75 * k5d + _A76 * k6d)
        t_new = target if clipped else t + h_try
        k7u, k7d = rhs(t_new, nu, nd)

        eu = h_try * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
        ed = h_try * (_E1 * k1d + _E3 * k3d + _E4 * k4d + _E5 * k5d + _E6 * k6d + _E7 * k7d)
        scu = tol * (1.0 + abs_(u))
        scd = tol * (1.0 + abs_(d))
        err = math.sqrt(0.5 * ((abs_(eu) / scu) ** 2 + (abs_(ed) / scd) ** 2))

        if err <= 1.0:
            t = t_new
            u, d = nu, nd
            k1u, k1d = k7u, k7d
            norm2 = u.real * u.real + u.imag * u.imag + d.real * d.real + d.imag * d.imag
            dev = abs_(math.sqrt(norm2) - 1.0)
            if dev > _RENORM_THRESHOLD:
                if dev > _NORM_FAILURE:
                    raise IntegratorFailureError(
                        f"norm drift {dev:.3e} at t = {t:.6g} exceeds {_NORM_FAILURE}"
                    )
                drift += dev
            if norm2 != 1.0:
                # project back onto the unit sphere every step; the RHS is
                # linear so the FSAL stage rescales exactly
                scale = 1.0 / math.sqrt(norm2)
                u *= scale
                d *= scale
                k1u *= scale
                k1d *= scale
            if t == next_sample:
                times.append(t)
                values.append(
                    (u.real * u.real + u.imag * u.imag) - (d.real * d.real + d.imag * d.imag)
                )
                next_k += 1
                next_sample = next_k * sample_dt
            fac = min(5.0, max(0.2, 0.9 * err ** -0.2)) if err > 0.0 else 5.0
            h = min(h_max, h_try * fac)
        else:
            h = h_try * max(0.2, 0.9 * err ** -0.2)
        if h < 1e-14 * max(1.0, t):
            raise StiffnessError(f"step size underflow (h = {h:.3e}) at t = {t:.6g}")

    norm = math.sqrt(u.real * u.real + u.imag * u.imag + d.real * d.real + d.imag * d.imag)
    final = Spinor(u / norm, d / norm)
    series = TimeSeries(
        times=np.array(times), values=np.array(values),
        method=f"numeric[{frame}]", params=p, norm_drift=drift,
    )
    return series, final


def sample_closed(
    method: analytic.MethodId,
    p: DriveParams,
    init: Spinor,
    times: Sequence[float],
) -> TimeSeries:
    """Closed-form <sigma_z> trace on the given time grid."""
    ts = np.asarray(times, dtype=float)
    vals = np.array([analytic.expect_sz_closed(method, float(t), p, init) for t in ts])
    return TimeSeries(times=ts, values=vals, method=method.value, params=p)


# ---------------------------------------------------------------------------
# Averaging, amplitude, sweeps

def hf_average(series: TimeSeries, p: DriveParams) -> TimeSeries:
    """Centered moving average over exactly one HF period.

    The window is rectangular; half a window is trimmed from each end.
    Sampling must be uniform, at most a tenth of the HF period, and must
    divide the period to within one part in 1e6 so the window covers it
    exactly.
    """
    t_hf = TWO_PI / p.Omega_HF
    if len(series) < 2:
        raise ValueError("series too short to average")
    steps = np.diff(series.times)
    dt = float(steps[0])
    if not np.allclose(steps, dt, rtol=0.0, atol=1e-9 * dt):
        raise ValueError("hf_average requires uniform sampling")
    if dt > t_hf / 10.0 + 1e-15:
        raise ValueError(
            f"sample spacing {dt:.3e} exceeds a tenth of the HF period {t_hf:.3e}"
        )
    w_exact = t_hf / dt
    w = int(round(w_exact))
    if abs(w_exact - w) > 1e-6 * w:
        raise ValueError(
            f"sample spacing must divide the HF period; got {w_exact!r} samples per period "
            f"(choose sample_dt = (2 pi / Omega_HF) / k)"
        )
    if len(series) < w + 1:
        raise ValueError(
            f"series shorter than one HF window ({w} samples): {len(series)}"
        )
    kernel = np.full(w, 1.0 / w)
    vals = np.convolve(series.values, kernel, mode="valid")
    n = series.times.size
    times = 0.5 * (series.times[: n - w + 1] + series.times[w - 1 :])
    return TimeSeries(
        times=times, values=vals, method=f"{series.method}+hfavg",
        params=p, norm_drift=series.norm_drift,
    )


def extract_amplitude(series: TimeSeries, p: DriveParams) -> float:
    """Half peak-to-peak excursion of an (already averaged) trace.

    The series must span at least 1.25 periods of the expected slow
    oscillation (from the corrected slow frequency) so the extremes are
    actually visited.
    """
    w_ms = analytic.omega_ms(p)
    span = float(series.times[-1] - series.times[0])
    if w_ms != 0.0:
        required = 1.25 * TWO_PI / abs(w_ms)
        if span < required:
            raise InsufficientSpanError(
                f"series spans {span:.6g} but the slow period {TWO_PI / abs(w_ms):.6g} "
                f"requires t_end >= {float(series.times[0]) + required:.6g}"
            )
    return 0.5 * (float(series.values.max()) - float(series.values.min()))


def _numeric_amplitude(p: DriveParams, t_end: float, tol: float) -> float:
    series, _ = integrate_schrodinger(p, Spinor.plus(), t_end, tol=tol)
    return extract_amplitude(hf_average(series, p), p)


def _sweep_point(args) -> float:
    p, t_end, tol = args
    return _numeric_amplitude(p, t_end, tol)


def resonance_sweep(
    p_template: DriveParams,
    omega_par_grid: Sequence[float],
    methods: Sequence[str],
    tol: float = 1e-8,
    jobs: Optional[int] = None,
    t_end: Optional[float] = None,
    on_error: str = "raise",
) -> SweepResult:
    """Amplitude-versus-omega_par curves.

    Closed-form methods evaluate pointwise; "numeric" integrates each
    grid point from |+> over an auto-chosen horizon of 1.5 slow periods
    (with a frequency floor so off-resonance points stay cheap) and can
    fan out over worker processes. on_error = "raise" aborts on the
    first failing point; "collect" records NaN and continues.
    """
    grid = [float(w) for w in omega_par_grid]
    if not grid:
        raise ValueError("omega_par grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("omega_par grid must be strictly increasing")
    if not methods:
        raise ValueError("at least one method required")
    known = {"exact", "avg", "ms", "numeric"}
    unknown = set(methods) - known
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    if on_error not in ("raise", "collect"):
        raise ValueError(f"on_error must be 'raise' or 'collect', got {on_error!r}")

    points = [
        DriveParams(
            omega_perp=p_template.omega_perp, omega_par=w,
            Omega_HF=p_template.Omega_HF, r=p_template.r, phi_hf=p_template.phi_hf,
        )
        for w in grid
    ]
    failures: list[tuple[float, str, str]] = []

    def fail(w: float, name: str, exc: BaseException):
        if on_error == "raise":
            raise SweepPointError(w, exc) from exc
        failures.append((w, name, str(exc)))

    columns: dict[str, list[float]] = {}
    for name in methods:
        if name == "numeric":
            continue
        method = analytic.MethodId(name)
        col = []
        for p, w in zip(points, grid):
            try:
                col.append(analytic.amplitude_closed(method, p))
            except Exception as exc:
                fail(w, name, exc)
                col.append(math.nan)
        columns[name] = col

    if "numeric" in methods:
        tasks: list = []
        for p, w in zip(points, grid):
            try:
                horizon = t_end if t_end is not None else (
                    1.5 * TWO_PI / max(abs(analytic.omega_ms(p)), OMEGA_FLOOR)
                )
                tasks.append((p, horizon, tol))
            except Exception as exc:
                fail(w, "numeric", exc)
                tasks.append(None)
        col = [math.nan] * len(tasks)
        live = [i for i, t in enumerate(tasks) if t is not None]
        if jobs is not None and jobs > 1 and len(live) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futs = {i: pool.submit(_sweep_point, tasks[i]) for i in live}
                for i, fut in futs.items():
                    try:
                        col[i] = float(fut.result())
                    except Exception as exc:
                        fail(grid[i], "numeric", exc)
        else:
            for i in live:
                try:
                    col[i] = float(_sweep_point(tasks[i]))
                except Exception as exc:
                    fail(grid[i], "numeric", exc)
        columns["numeric"] = col

    ordered = {name: columns[name] for name in methods if name in columns}
    return SweepResult(
        omega_par_grid=np.array(grid), amplitudes={k: np.array(v) for k, v in ordered.items()},
        params=p_template, failures=tuple(failures),
    )
