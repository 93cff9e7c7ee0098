"""Time reversal, multiplicative reversiblization and the spectral expansion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain_core import ChainModel, require_positive_pi, decompose, pi_inner_product, pi_norm, stationary_residual
from .errors import CheckFailed, NoConvergence, NonStationary

MAX_ITER = 1_000_000


@dataclass(frozen=True)
class SpectralReport:
    lam: float
    gap: float
    lambda_R: float
    iterations: int


@dataclass(frozen=True)
class MarginReport:
    """Outcome of checking ``lhs <= rhs`` (up to ``slack``) for one inequality."""

    name: str
    lhs: float
    rhs: float
    slack: float = 0.0

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + self.slack

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "passed": self.passed,
        }


def time_reversal(chain: ChainModel, pi) -> ChainModel:
    """M~(x, y) = pi(y) M(y, x) / pi(x)."""
    pi = require_positive_pi(pi)
    return ChainModel(chain.rows.T * pi[None, :] / pi[:, None])


def reversiblization(chain: ChainModel, pi) -> ChainModel:
    """R(M) = M M~, reversible with respect to pi."""
    return ChainModel(chain.rows @ time_reversal(chain, pi).rows)


def detailed_balance_residual(chain: ChainModel, pi) -> float:
    flow = np.asarray(pi, dtype=float)[:, None] * chain.rows
    return float(np.abs(flow - flow.T).max())


def symmetrized_reversiblization(chain: ChainModel, pi) -> np.ndarray:
    """S = D^{1/2} R D^{-1/2}, formed as A A^T with A = D^{1/2} M D^{-1/2}.

    Building S from A keeps it exactly symmetric and PSD in floating point.
    """
    root = np.sqrt(require_positive_pi(pi))
    a = root[:, None] * chain.rows / root[None, :]
    return a @ a.T


def spectral_expansion(chain: ChainModel, pi, tol: float = 1e-13, seed: int = 0,
                       max_iter: int = MAX_ITER) -> SpectralReport:
    """lambda(M) = sqrt(second eigenvalue of R(M)) by deflated power iteration.

    The top eigenvector of the symmetrized reversiblization is sqrt(pi) with
    eigenvalue 1; it is subtracted from the operator and projected out of
    every iterate, and the Rayleigh quotient is iterated until successive
    values differ by at most ``tol``.
    """
    pi = np.asarray(pi, dtype=float)
    res = stationary_residual(chain, pi)
    if res > 1e-8:
        raise NonStationary(f"||pi M - pi||_1 = {res:.3e}")
    top = np.sqrt(pi)
    top /= np.linalg.norm(top)
    # Deflating the operator as well as the iterates sends any rounding
    # residue along sqrt(pi) to zero instead of letting it regrow.
    s = symmetrized_reversiblization(chain, pi) - np.outer(top, top)

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(chain.n)
    v -= (v @ top) * top
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return SpectralReport(0.0, 1.0, 0.0, 0)
    v /= norm
    rho = float(v @ s @ v)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w = s @ v
        w -= (w @ top) * top
        norm = np.linalg.norm(w)
        if norm == 0.0:
            rho = 0.0
            break
        v = w / norm
        new = float(v @ s @ v)
        if abs(new - rho) <= tol:
            rho = new
            break
        rho = new
    else:
        raise NoConvergence(f"power iteration did not settle in {max_iter} steps", iterations=max_iter)

    if rho < -1e-8 or rho > 1.0 + 1e-8:
        raise NoConvergence(f"second eigenvalue {rho!r} of R(M) outside [0, 1]", iterations=iterations)
    lam_r = min(max(rho, 0.0), 1.0)
    lam = math.sqrt(lam_r)
    return SpectralReport(lam=lam, gap=1.0 - lam, lambda_R=lam_r, iterations=iterations)


def random_perpendicular(pi, rng: np.random.Generator) -> np.ndarray:
    """A random vector y with <y, pi>_pi = 0 and ||y||_pi = 1."""
    _, perp = decompose(rng.standard_normal(len(pi)), pi)
    return perp / pi_norm(perp, pi)


def pi_stretch(y, matrix: np.ndarray, pi) -> float:
    """||y matrix||_pi / ||y||_pi, with 0 for the zero vector."""
    base = pi_norm(y, pi)
    if base == 0.0:
        return 0.0
    return pi_norm(np.asarray(y) @ matrix, pi) / base


def m_operator_check(chain: ChainModel, pi, trials: int = 100, seed: int = 0,
                     lam: float | None = None) -> MarginReport:
    """Check pi M = pi and ||yM||_pi <= lambda ||y||_pi, yM perp pi, for random y perp pi.

    Raises CheckFailed with the offending y as witness.
    """
    pi = np.asarray(pi, dtype=float)
    if lam is None:
        lam = spectral_expansion(chain, pi).lam
    res = stationary_residual(chain, pi)
    if res > 1e-10:
        raise CheckFailed("pi M = pi", res, 1e-10)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        y = random_perpendicular(pi, rng)
        ym = chain.step(y)
        along = abs(pi_inner_product(ym, pi, pi))
        if along > 1e-10:
            raise CheckFailed("yM perp pi", along, 1e-10, witness=y)
        ratio = pi_stretch(y, chain.rows, pi)
        if ratio > lam + 1e-8:
            raise CheckFailed("||yM||_pi <= lambda ||y||_pi", ratio, lam, witness=y)
        worst = max(worst, ratio)
    return MarginReport("M-operator stretch", worst, lam, slack=1e-8)
