"""Fixed-step flows, conservation monitoring and flow-equivalence checks.

Integration is vectorised over a batch of systems: every member of the batch
shares the time grid, so many specs (or many initial conditions) advance in
one numpy pass per stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from quadham.errors import NonFinite, StepSizeError
from quadham.linalg3 import cross, vec3
from quadham.normal_form import AffineMap3, NormalForm, invert_map
from quadham.poisson import SystemSpec, casimir_value, hamiltonian_value

METHODS = ("rk4", "implicit_midpoint")
DRIFT_TOL = 1e-4


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 1e-3
    t_end: float = 10.0
    tol: float = 1e-13
    max_iter: int = 50

    def __post_init__(self):
        method = {"midpoint": "implicit_midpoint"}.get(self.method, self.method)
        if method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        object.__setattr__(self, "method", method)
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.dt > self.t_end:
            raise ValueError(f"dt={self.dt} exceeds t_end={self.t_end}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))

    @property
    def times(self) -> np.ndarray:
        # step is t_end / n_steps so the grid always lands on t_end
        return np.linspace(0.0, self.t_end, self.n_steps + 1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    casimir_log: np.ndarray
    hamiltonian_log: np.ndarray

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class EquivalenceReport:
    max_state_error: float
    max_casimir_drift: float
    max_hamiltonian_drift: float
    tol: float
    drift_tol: float
    passed: bool


class _Batch:
    """Stacked coefficients of several systems."""

    def __init__(self, specs: Sequence[SystemSpec]):
        self.K = np.stack([s.K.full for s in specs])
        self.k = np.stack([s.k for s in specs])
        self.A = np.stack([s.A.full for s in specs])
        self.a = np.stack([s.a for s in specs])

    def field(self, u: np.ndarray) -> np.ndarray:
        x = np.matmul(self.K, u[..., None])[..., 0] + self.k
        y = np.matmul(self.A, u[..., None])[..., 0] + self.a
        return cross(x, y)


def _rk4_step(f, u, h):
    k1 = f(u)
    k2 = f(u + 0.5 * h * k1)
    k3 = f(u + 0.5 * h * k2)
    k4 = f(u + h * k3)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _midpoint_step(f, u, h, tol, max_iter):
    y = u + h * f(u)
    for _ in range(max_iter):
        y_new = u + h * f(0.5 * (u + y))
        err = np.max(np.abs(y_new - y) / np.maximum(1.0, np.abs(y_new)))
        y = y_new
        if err <= tol:
            return y
    raise StepSizeError(
        f"implicit midpoint did not converge in {max_iter} iterations (last update {err:.2e}); "
        "reduce dt"
    )


def _flow(batch: _Batch, u0: np.ndarray, cfg: IntegratorConfig) -> np.ndarray:
    n = cfg.n_steps
    h = cfg.t_end / n
    states = np.empty((n + 1,) + u0.shape)
    states[0] = u = u0
    # overflow is reported through NonFinite below, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n + 1):
            if cfg.method == "rk4":
                u = _rk4_step(batch.field, u, h)
            else:
                u = _midpoint_step(batch.field, u, h, cfg.tol, cfg.max_iter)
            if not np.all(np.isfinite(u)):
                raise NonFinite(f"state became non-finite at t={i * h:.6g}")
            states[i] = u
    return states


def integrate_many(specs: Sequence[SystemSpec], u0s, cfg: IntegratorConfig) -> list:
    """Integrate ``specs[i]`` from ``u0s[i]`` on a shared grid."""
    u0s = np.asarray(u0s, dtype=float).reshape(len(specs), 3)
    if not np.all(np.isfinite(u0s)):
        raise ValueError("initial states must be finite")
    states = _flow(_Batch(specs), u0s, cfg)
    times = cfg.times
    out = []
    for i, spec in enumerate(specs):
        s = states[:, i, :]
        out.append(Trajectory(times, s, casimir_value(spec, s), hamiltonian_value(spec, s)))
    return out


def integrate(spec: SystemSpec, u0, cfg: IntegratorConfig) -> Trajectory:
    return integrate_many([spec], [vec3(u0)], cfg)[0]


def conservation_report(traj: Trajectory) -> tuple[float, float]:
    """Relative drifts ``max_t |Q(t) - Q(0)| / max(1, |Q(0)|)`` of the Casimir and Hamiltonian."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")

    def drift(q):
        return float(np.max(np.abs(q - q[0])) / max(1.0, abs(q[0])))

    return drift(traj.casimir_log), drift(traj.hamiltonian_log)


def verify_conjugacy_many(
    specs_u: Sequence[SystemSpec],
    specs_v: Sequence[SystemSpec],
    maps: Sequence[AffineMap3],
    u0s,
    cfg: IntegratorConfig,
    tol: float = 1e-6,
    drift_tol: float = DRIFT_TOL,
) -> list:
    """Check ``u(t) = M v(t) + c`` for each triple (original, reduced, map).

    Both flows use the same time stamps; no reparametrisation is applied.
    ``tol`` bounds the state mismatch, ``drift_tol`` the relative drift of the
    original system's Casimir and Hamiltonian (an integrator-quality check).
    """
    u0s = np.asarray(u0s, dtype=float).reshape(len(specs_u), 3)
    v0s = np.stack([invert_map(m)(u0) for m, u0 in zip(maps, u0s)])
    traj_u = integrate_many(specs_u, u0s, cfg)
    traj_v = integrate_many(specs_v, v0s, cfg)
    reports = []
    for tu, tv, m in zip(traj_u, traj_v, maps):
        err = float(np.max(np.linalg.norm(m(tv.states) - tu.states, axis=1)))
        c_drift, h_drift = conservation_report(tu)
        passed = err <= tol and c_drift <= drift_tol and h_drift <= drift_tol
        reports.append(EquivalenceReport(err, c_drift, h_drift, tol, drift_tol, passed))
    return reports


def verify_equivalence_many(
    specs, nfs: Sequence[NormalForm], u0s, cfg, tol=1e-6, drift_tol=DRIFT_TOL
) -> list:
    return verify_conjugacy_many(
        specs, [nf.as_spec() for nf in nfs], [nf.map for nf in nfs], u0s, cfg, tol, drift_tol
    )


def verify_equivalence(
    spec: SystemSpec,
    nf: NormalForm,
    u0,
    cfg: IntegratorConfig,
    tol: float = 1e-6,
    drift_tol: float = DRIFT_TOL,
) -> EquivalenceReport:
    """Integrate the original and normal-form systems and compare under ``nf.map``."""
    return verify_equivalence_many([spec], [nf], [vec3(u0)], cfg, tol, drift_tol)[0]
