"""Factor-graph optimization over plane parameters and concept origins.

The problem couples plane variables (theta, offset) and concept origin
variables (x, y) through *learned* factors: the residual of a concept
factor is the difference between the origin predicted by the frozen
F-GNN from the current plane estimates and the current origin variable.
Residuals and Jacobians are obtained by differentiating through the
network, and the nonlinear least squares problem is solved with
Levenberg-Marquardt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .geometry import PlaneParam, wrap_angle
from .origin_regressor import FGnnModel, factor_forward

__all__ = [
    "SingularSystemError",
    "PlaneVar",
    "OriginVar",
    "ConceptFactor",
    "PlanePrior",
    "FactorProblem",
    "LMConfig",
    "OptimizeReport",
    "optimize",
    "residual_room",
    "residual_wall",
]


class SingularSystemError(ValueError):
    """The factor graph has an unconstrained (gauge) direction."""


def _check_information(info: np.ndarray) -> np.ndarray:
    info = np.asarray(info, dtype=np.float64)
    if info.shape != (2, 2):
        raise ValueError(f"information must be 2x2, got {info.shape}")
    if not np.allclose(info, info.T):
        raise ValueError("information matrix must be symmetric")
    # Cholesky doubles as the SPD check.
    try:
        np.linalg.cholesky(info)
    except np.linalg.LinAlgError as exc:
        raise ValueError("information matrix must be positive definite") from exc
    return info


@dataclass
class PlaneVar:
    """An optimizable plane in (theta, offset) parameterization."""

    id: int
    param: PlaneParam
    fixed: bool = False


@dataclass
class OriginVar:
    """An optimizable concept origin."""

    id: int
    value: np.ndarray

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64).reshape(2)


@dataclass
class ConceptFactor:
    """Learned factor tying member planes to their concept origin.

    The residual is ``origin - f(planes)`` where ``f`` is the frozen
    F-GNN evaluated at the current plane estimates.  Centroids and
    lengths are linearization anchors and stay constant.
    """

    kind: str
    model: FGnnModel
    plane_ids: tuple
    origin_id: int
    centroids: np.ndarray
    lengths: np.ndarray
    information: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        if self.kind not in ("room", "wall"):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.model.kind != self.kind:
            raise ValueError(
                f"factor kind {self.kind!r} does not match model kind "
                f"{self.model.kind!r}")
        self.plane_ids = tuple(self.plane_ids)
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        self.lengths = np.asarray(self.lengths, dtype=np.float64)
        if self.centroids.shape != (len(self.plane_ids), 2):
            raise ValueError("centroids must be (n_members, 2)")
        if self.lengths.shape != (len(self.plane_ids),):
            raise ValueError("lengths must be (n_members,)")
        self.information = _check_information(self.information)
        self.whitener = np.linalg.cholesky(self.information).T

    def evaluate(self, params):
        """Whitened residual and its Jacobian wrt member plane params.

        Parameters
        ----------
        params : sequence of PlaneParam
            Current estimates for the member planes, in ``plane_ids``
            order.
        origin : handled by the caller; this returns the predicted
            origin so the caller forms ``pred - origin``.

        Returns
        -------
        (np.ndarray, np.ndarray)
            Predicted world origin (2,) and the Jacobian of the
            prediction wrt the stacked member params (2, 2*n_members)
            ordered [theta_0, offset_0, theta_1, offset_1, ...].
            Both are unwhitened; whitening is applied by the caller.
        """
        theta = Tensor(np.array([p.theta for p in params]), requires_grad=True)
        offset = Tensor(np.array([p.offset for p in params]), requires_grad=True)
        pred, ref = factor_forward(self.model, theta, offset,
                                   self.centroids, self.lengths)
        n = len(params)
        jac = np.zeros((2, 2 * n))
        for row in range(2):
            theta.zero_grad()
            offset.zero_grad()
            seed = np.zeros(2)
            seed[row] = 1.0
            ad.backward(pred, seed=seed)
            jac[row, 0::2] = theta.grad
            jac[row, 1::2] = offset.grad
        return pred.data + ref, jac


@dataclass
class PlanePrior:
    """Gaussian prior anchoring a plane at its observed parameters."""

    plane_id: int
    target: PlaneParam
    information: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        self.information = _check_information(self.information)
        self.whitener = np.linalg.cholesky(self.information).T

    def residual(self, param: PlaneParam) -> np.ndarray:
        return np.array([wrap_angle(param.theta - self.target.theta),
                         param.offset - self.target.offset])


class FactorProblem:
    """Container tying variables, factors and priors together."""

    def __init__(self):
        self.plane_vars: dict[int, PlaneVar] = {}
        self.origin_vars: dict[int, OriginVar] = {}
        self.factors: list[ConceptFactor] = []
        self.priors: list[PlanePrior] = []

    def add_plane(self, var: PlaneVar):
        if var.id in self.plane_vars:
            raise ValueError(f"duplicate plane variable {var.id}")
        self.plane_vars[var.id] = var

    def add_origin(self, var: OriginVar):
        if var.id in self.origin_vars:
            raise ValueError(f"duplicate origin variable {var.id}")
        self.origin_vars[var.id] = var

    def add_factor(self, factor: ConceptFactor):
        for pid in factor.plane_ids:
            if pid not in self.plane_vars:
                raise KeyError(f"factor references unknown plane {pid}")
        if factor.origin_id not in self.origin_vars:
            raise KeyError(f"factor references unknown origin {factor.origin_id}")
        self.factors.append(factor)

    def add_prior(self, prior: PlanePrior):
        if prior.plane_id not in self.plane_vars:
            raise KeyError(f"prior references unknown plane {prior.plane_id}")
        self.priors.append(prior)

    # -- indexing -------------------------------------------------------

    def _free_layout(self):
        """Column offsets of every free variable in the state vector."""
        cols = {}
        n = 0
        for pid in sorted(self.plane_vars):
            if not self.plane_vars[pid].fixed:
                cols[("plane", pid)] = n
                n += 2
        for oid in sorted(self.origin_vars):
            cols[("origin", oid)] = n
            n += 2
        return cols, n

    def check_gauge(self):
        """Raise SingularSystemError if any free direction is unconstrained.

        A free plane with no prior, or an origin with no factor, makes
        the normal equations singular regardless of damping history.
        """
        with_prior = {p.plane_id for p in self.priors}
        for pid, var in self.plane_vars.items():
            if not var.fixed and pid not in with_prior:
                raise SingularSystemError(
                    f"free plane {pid} has no prior; the system is singular")
        with_factor = {f.origin_id for f in self.factors}
        for oid in self.origin_vars:
            if oid not in with_factor:
                raise SingularSystemError(
                    f"origin {oid} appears in no factor; the system is singular")

    # -- linearization --------------------------------------------------

    def linearize(self):
        """Whitened residual vector and dense Jacobian at the current state.

        Returns
        -------
        (np.ndarray, np.ndarray)
            Residual vector (m,) and Jacobian (m, n) over the free
            variables, ordered planes-then-origins by ascending id.
        """
        cols, n = self._free_layout()
        rows = []
        jrows = []
        for factor in self.factors:
            params = [self.plane_vars[pid].param for pid in factor.plane_ids]
            pred, jac = factor.evaluate(params)
            origin = self.origin_vars[factor.origin_id]
            r = factor.whitener @ (origin.value - pred)
            jr = np.zeros((2, n))
            wj = factor.whitener @ jac
            for k, pid in enumerate(factor.plane_ids):
                key = ("plane", pid)
                if key in cols:
                    jr[:, cols[key]:cols[key] + 2] -= wj[:, 2 * k:2 * k + 2]
            okey = ("origin", factor.origin_id)
            jr[:, cols[okey]:cols[okey] + 2] += factor.whitener
            rows.append(r)
            jrows.append(jr)
        for prior in self.priors:
            var = self.plane_vars[prior.plane_id]
            r = prior.whitener @ prior.residual(var.param)
            jr = np.zeros((2, n))
            key = ("plane", prior.plane_id)
            if key in cols:
                jr[:, cols[key]:cols[key] + 2] = prior.whitener
            rows.append(r)
            jrows.append(jr)
        if not rows:
            return np.zeros(0), np.zeros((0, n))
        return np.concatenate(rows), np.vstack(jrows)

    def cost(self) -> float:
        r, _ = self.linearize()
        return 0.5 * float(r @ r)

    def _apply_step(self, delta, cols):
        for (kind, vid), c in cols.items():
            if kind == "plane":
                var = self.plane_vars[vid]
                var.param = PlaneParam(
                    theta=wrap_angle(var.param.theta + delta[c]),
                    offset=var.param.offset + delta[c + 1])
            else:
                self.origin_vars[vid].value = \
                    self.origin_vars[vid].value + delta[c:c + 2]

    def snapshot(self):
        planes = {pid: v.param for pid, v in self.plane_vars.items()}
        origins = {oid: v.value.copy() for oid, v in self.origin_vars.items()}
        return planes, origins

    def restore(self, snap):
        planes, origins = snap
        for pid, param in planes.items():
            self.plane_vars[pid].param = param
        for oid, value in origins.items():
            self.origin_vars[oid].value = value.copy()


def _residual_concept(model: FGnnModel, origin, planes) -> np.ndarray:
    from .origin_regressor import infer_origin
    xy = origin.xy if hasattr(origin, "xy") else np.asarray(origin, dtype=np.float64)
    return xy - infer_origin(model, list(planes)).xy


def residual_room(model: FGnnModel, origin, planes) -> np.ndarray:
    """Room residual r = origin - f_R(planes) (>= 2 member planes)."""
    if model.kind != "room":
        raise ValueError("residual_room needs a room model")
    return _residual_concept(model, origin, planes)


def residual_wall(model: FGnnModel, origin, planes) -> np.ndarray:
    """Wall residual r = origin - f_W(planes) (exactly 2 member planes)."""
    if model.kind != "wall":
        raise ValueError("residual_wall needs a wall model")
    return _residual_concept(model, origin, planes)


@dataclass
class LMConfig:
    """Levenberg-Marquardt settings."""

    lambda0: float = 1e-4
    max_iters: int = 100
    tol: float = 1e-6
    lambda_up: float = 10.0
    lambda_down: float = 3.0
    lambda_max: float = 1e10


@dataclass
class OptimizeReport:
    """Per-iteration record of an LM run."""

    costs: list[float]
    lambdas: list[float]
    accepted: list[bool]
    converged: bool
    grad_norm: float = float("nan")

    @property
    def initial_cost(self) -> float:
        return self.costs[0]

    @property
    def final_cost(self) -> float:
        return self.costs[-1]


def optimize(problem: FactorProblem, cfg: LMConfig | None = None,
             verbose: bool = False) -> OptimizeReport:
    """Minimize the whitened residual with Levenberg-Marquardt.

    Steps solve ``(J^T J + lambda I) delta = -J^T r``; a step is
    accepted only when it strictly decreases the cost, in which case
    lambda shrinks, otherwise it grows and the step is retried.
    Terminates when the relative cost decrease falls below ``tol`` or
    the iteration budget is exhausted.
    """
    cfg = cfg or LMConfig()
    problem.check_gauge()
    cols, n = problem._free_layout()

    lam = cfg.lambda0
    r, jac = problem.linearize()
    cost = 0.5 * float(r @ r)
    costs, lambdas, accepted = [cost], [lam], []
    converged = False

    for it in range(cfg.max_iters):
        jtj = jac.T @ jac
        jtr = jac.T @ r
        if n == 0 or np.max(np.abs(jtr)) < 1e-12:
            converged = True
            break
        try:
            delta = np.linalg.solve(jtj + lam * np.eye(n), -jtr)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError("normal equations are singular") from exc
        snap = problem.snapshot()
        problem._apply_step(delta, cols)
        r_new, jac_new = problem.linearize()
        cost_new = 0.5 * float(r_new @ r_new)
        if cost_new < cost:
            rel = (cost - cost_new) / max(cost, 1e-300)
            r, jac, cost = r_new, jac_new, cost_new
            lam = max(lam / cfg.lambda_down, 1e-12)
            accepted.append(True)
            costs.append(cost)
            lambdas.append(lam)
            if verbose:
                print(f"iter {it:3d}  cost {cost:.6e}  lambda {lam:.2e}  accept")
            if rel < cfg.tol:
                converged = True
                break
        else:
            problem.restore(snap)
            lam *= cfg.lambda_up
            accepted.append(False)
            costs.append(cost)
            lambdas.append(lam)
            if verbose:
                print(f"iter {it:3d}  cost {cost:.6e}  lambda {lam:.2e}  reject")
            if lam > cfg.lambda_max:
                break
    grad_norm = float(np.linalg.norm(jac.T @ r)) if r.size else 0.0
    return OptimizeReport(costs=costs, lambdas=lambdas, accepted=accepted,
                          converged=converged, grad_norm=grad_norm)
