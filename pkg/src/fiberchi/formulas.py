"""Closed-form Euler characteristics for the fibration stages of a germ.

For a polynomial map-germ f from (R^M, 0) to (R^K, 0) with M > K >= 2,
tame and with discriminant {0}, every stage I = 1..K carries three
compact objects: the stage fiber F_I (all diffeomorphic to the smallest
fiber F_f, so chi(F_I) = chiF), its boundary bF_I inside the sphere, and
the stage link L_I cut on the sphere by the first I components.  Their
Euler characteristics are determined by (M, K, I, chiF) alone:

    chi(bF_f)  = 0                 if M-K even, else 2*chiF
    chi(bF_I)  = chiF * chi(S^{M-I-1})
    chi(L_I)   = chi(S^{M-1}) + (-1)^{M-I-1} * chiF * chi(S^{I-1})

Consecutive stages differ by the same Le-Greuel-type step on both rows:

    chi(bF_{I+1}) - chi(bF_I) = chi(L_{I+1}) - chi(L_I)
                              = 2 * (-1)^{M-I} * chiF

so the defect db = chi(bF_1) - chi(L_1) is stage-independent; it vanishes
for every even M and equals 2*(chiF - 1) for odd M.  Everything here is
exact integer arithmetic.  The builders double-check each value through
the independent cut-and-paste route of :mod:`fiberchi.spaces` and refuse
to return inconsistent reports.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from . import spaces
from .spaces import chi_sphere


class FormulaHypothesisError(ValueError):
    """Inputs violate the standing dimension hypotheses (M > K >= 2 etc.)."""


class InvariantBreach(RuntimeError):
    """Two supposedly-equal routes disagreed.  Must be impossible; fatal."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise FormulaHypothesisError(msg)


def _require_dims(M: int, K: int) -> None:
    _require(M > K >= 2, f"require M > K >= 2, got M={M}, K={K}")


def _require_stage(M: int, K: int, I: int) -> None:
    _require_dims(M, K)
    _require(1 <= I <= K, f"require 1 <= I <= K, got I={I}, K={K}")


def chi_boundary_f(M: int, K: int, chiF: int) -> int:
    """chi of the smallest-fiber boundary: 0 for even M-K, 2*chiF for odd."""
    _require_dims(M, K)
    return 0 if (M - K) % 2 == 0 else 2 * chiF


def _chi_boundary_core(M: int, I: int, chiF: int) -> int:
    return chiF * chi_sphere(M - I - 1)


def _chi_link_core(M: int, I: int, chiF: int) -> int:
    return chi_sphere(M - 1) + (-1) ** (M - I - 1) * chiF * chi_sphere(I - 1)


def chi_boundary(M: int, K: int, I: int, chiF: int) -> int:
    """chi of the stage-I fiber boundary, chiF * chi(S^{M-I-1}).

    Valid for every 1 <= I <= K; at I = K this reproduces
    :func:`chi_boundary_f` since the stage-K fiber is the smallest one.
    """
    _require_stage(M, K, I)
    return _chi_boundary_core(M, I, chiF)


def chi_boundary_parity_form(M: int, K: int, I: int, chiF: int) -> int:
    """The same boundary chi written through K-side sphere dimensions.

    Splits on the parity of M-K: chiF*chi(S^{K-I-1}) when M-K is even,
    chiF*chi(S^{K-I}) when odd.  Kept as an independently coded route;
    :func:`chi_boundary` is the canonical form and their agreement is
    enforced in :func:`build_stage_report`.
    """
    _require_stage(M, K, I)
    if (M - K) % 2 == 0:
        return chiF * chi_sphere(K - I - 1)
    return chiF * chi_sphere(K - I)


def chi_link(M: int, K: int, I: int, chiF: int) -> int:
    """chi of the stage-I link, chi(S^{M-1}) + (-1)^{M-I-1} chiF chi(S^{I-1})."""
    _require_stage(M, K, I)
    return _chi_link_core(M, I, chiF)


def le_greuel_boundary(M: int, I: int, chiF: int) -> int:
    """Step between consecutive boundary chis: 2*(-1)^{M-I}*chiF.

    The claimed value is re-derived from the closed forms of stages I and
    I+1; any disagreement is an internal error, not a user error.
    """
    _require(1 <= I <= M - 2, f"require 1 <= I < K < M, got I={I}, M={M}")
    step = 2 * (-1) ** (M - I) * chiF
    diff = _chi_boundary_core(M, I + 1, chiF) - _chi_boundary_core(M, I, chiF)
    if step != diff:
        raise InvariantBreach(
            f"boundary step mismatch at M={M}, I={I}, chiF={chiF}: {step} != {diff}"
        )
    return step


def le_greuel_link(M: int, I: int, chiF: int) -> int:
    """Step between consecutive link chis; equal to the boundary step."""
    _require(1 <= I <= M - 2, f"require 1 <= I < K < M, got I={I}, M={M}")
    step = 2 * (-1) ** (M - I) * chiF
    diff = _chi_link_core(M, I + 1, chiF) - _chi_link_core(M, I, chiF)
    if step != diff:
        raise InvariantBreach(
            f"link step mismatch at M={M}, I={I}, chiF={chiF}: {step} != {diff}"
        )
    return step


def db_invariant(M: int, K: int, chiF: int) -> int:
    """Boundary-minus-link defect, stage-independent by construction.

    Zero for every even M; for odd M it equals 2*(chiF - 1), hence zero
    exactly when chiF = 1 (the value forced by an isolated critical point
    in odd dimensions).  Stage-independence is re-verified on all stages.
    """
    _require_dims(M, K)
    db = _chi_boundary_core(M, 1, chiF) - _chi_link_core(M, 1, chiF)
    for I in range(1, K + 1):
        d = _chi_boundary_core(M, I, chiF) - _chi_link_core(M, I, chiF)
        if d != db:
            raise InvariantBreach(
                f"defect not stage-independent at M={M}, K={K}, I={I}: {d} != {db}"
            )
    return db


def boundary_equals_link_criterion(M: int, K: int, I: int, chiF: int) -> bool:
    """Whether chi(bF_I) = chi(L_I) at stage I, for odd M and I >= 2.

    For odd M this equality holds at one stage iff it holds at every
    stage iff chiF = 1; both facts are re-checked before returning.
    """
    _require(M % 2 == 1, f"require M odd, got M={M}")
    _require_dims(M, K)
    _require(2 <= I <= K, f"require 2 <= I <= K, got I={I}, K={K}")
    result = _chi_boundary_core(M, I, chiF) == _chi_link_core(M, I, chiF)
    if result != (chiF == 1):
        raise InvariantBreach(
            f"criterion disagrees with chiF==1 at M={M}, K={K}, I={I}, chiF={chiF}"
        )
    for J in range(2, K + 1):
        alt = _chi_boundary_core(M, J, chiF) == _chi_link_core(M, J, chiF)
        if alt != result:
            raise InvariantBreach(
                f"criterion depends on the stage at M={M}, K={K}, chiF={chiF}"
            )
    return result


# ---------------------------------------------------------------------------
# Stage reports
# ---------------------------------------------------------------------------

SCHEMA_VERSION = 1

# column order shared by the CSV serialization and the JSON stage rows
STAGE_COLUMNS = ("I", "chi_fiber", "chi_boundary", "chi_link", "boundary_minus_link")


@dataclass(frozen=True)
class StageReport:
    """All stage characteristics of a germ with the given (M, K, chiF)."""

    M: int
    K: int
    chiF: int
    chi_boundary: tuple  # index 0 is stage 1
    chi_link: tuple
    chi_fiber: tuple
    db: int
    parity_class: str  # "even-M" | "odd-M"

    def stage_row(self, I: int) -> dict:
        return {
            "I": I,
            "chi_fiber": self.chi_fiber[I - 1],
            "chi_boundary": self.chi_boundary[I - 1],
            "chi_link": self.chi_link[I - 1],
            "boundary_minus_link": self.chi_boundary[I - 1] - self.chi_link[I - 1],
        }

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "M": self.M,
            "K": self.K,
            "chi_fiber_smallest": self.chiF,
            "parity_class": self.parity_class,
            "db": self.db,
            "stages": [self.stage_row(I) for I in range(1, self.K + 1)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(STAGE_COLUMNS)
        for I in range(1, self.K + 1):
            row = self.stage_row(I)
            w.writerow([row[c] for c in STAGE_COLUMNS])
        return buf.getvalue()


def build_stage_report(
    M: int, K: int, chiF: int, isolated_critical_point: bool = False
) -> StageReport:
    """Fill every stage value and run the full cross-consistency battery.

    Checks performed per stage (all exact):
      * canonical closed form against the K-parity rewriting;
      * the gluing route of :func:`spaces.boundary_decomposition` for I < K
        and the smallest-fiber formula at I = K;
      * the consecutive-stage doubling route, chi(bF_I) = 2*chiF - chi(bF_{I+1});
      * tube/link/overlap decomposition closes up to chi(S^{M-1});
      * both Le-Greuel steps and their mutual equality; period two;
      * even M forces boundary = link at every stage and db = 0;
      * odd M forces the (I even / I odd) dichotomy.

    With ``isolated_critical_point`` and odd M, chiF must be 1.
    """
    _require_dims(M, K)
    chiF = int(chiF)

    boundaries = []
    links = []
    for I in range(1, K + 1):
        b = chi_boundary(M, K, I, chiF)
        l = chi_link(M, K, I, chiF)
        if b != chi_boundary_parity_form(M, K, I, chiF):
            raise InvariantBreach(
                f"parity rewriting disagrees at M={M}, K={K}, I={I}, chiF={chiF}"
            )
        if I < K:
            route = spaces.chi(spaces.boundary_decomposition(M, K, I)).specialize(chiF)
        else:
            route = chi_boundary_f(M, K, chiF)
        if route != b:
            raise InvariantBreach(
                f"gluing route disagrees at M={M}, K={K}, I={I}, chiF={chiF}: "
                f"{route} != {b}"
            )
        closure = spaces.chi(
            spaces.tube_sphere_decomposition(M, I),
            env={f"F{I}": chiF, f"bF{I}": b, f"L{I}": l},
        ).as_int()
        if closure != chi_sphere(M - 1):
            raise InvariantBreach(
                f"sphere closure fails at M={M}, K={K}, I={I}, chiF={chiF}: "
                f"{closure} != {chi_sphere(M - 1)}"
            )
        boundaries.append(b)
        links.append(l)

    for I in range(1, K):
        via_double = spaces.chi(
            spaces.double_decomposition(I),
            env={f"F{I + 1}": chiF, f"bF{I + 1}": boundaries[I]},
        ).as_int()
        if via_double != boundaries[I - 1]:
            raise InvariantBreach(
                f"doubling route disagrees at M={M}, K={K}, I={I}, chiF={chiF}: "
                f"{via_double} != {boundaries[I - 1]}"
            )
        sb = le_greuel_boundary(M, I, chiF)
        sl = le_greuel_link(M, I, chiF)
        if sb != sl:
            raise InvariantBreach(f"steps disagree at M={M}, I={I}, chiF={chiF}")
        if boundaries[I] - boundaries[I - 1] != sb:
            raise InvariantBreach(f"boundary step wrong at M={M}, I={I}")
        if links[I] - links[I - 1] != sl:
            raise InvariantBreach(f"link step wrong at M={M}, I={I}")
    for I in range(1, K - 1):
        if boundaries[I + 1] != boundaries[I - 1] or links[I + 1] != links[I - 1]:
            raise InvariantBreach(f"period-2 fails at M={M}, K={K}, I={I}")

    db = db_invariant(M, K, chiF)
    if M % 2 == 0:
        if db != 0 or any(b != l for b, l in zip(boundaries, links)):
            raise InvariantBreach(f"even-M identities fail at M={M}, K={K}, chiF={chiF}")
        parity = "even-M"
    else:
        for I in range(1, K + 1):
            b, l = boundaries[I - 1], links[I - 1]
            if I % 2 == 0:
                ok = (l == 2) and (b == 2 * chiF)
            else:
                ok = (l == 2 - 2 * chiF) and (b == 0)
            if not ok:
                raise InvariantBreach(f"odd-M dichotomy fails at M={M}, I={I}, chiF={chiF}")
        parity = "odd-M"
        if K >= 2:
            boundary_equals_link_criterion(M, K, 2, chiF)
        if isolated_critical_point and chiF != 1:
            raise InvariantBreach(
                f"odd M with an isolated critical point forces chiF=1, got {chiF}"
            )

    return StageReport(
        M=M,
        K=K,
        chiF=chiF,
        chi_boundary=tuple(boundaries),
        chi_link=tuple(links),
        chi_fiber=(chiF,) * K,
        db=db,
        parity_class=parity,
    )


def run_identity_grid(max_dim: int = 12, chi_lo: int = -5, chi_hi: int = 5) -> int:
    """Build reports over the exhaustive grid; returns the case count.

    Grid: 2 <= K < M <= max_dim, chi_lo <= chiF <= chi_hi.  Every report
    construction runs the full battery, so simply completing the sweep
    certifies all identities on the grid.
    """
    cases = 0
    for M in range(3, max_dim + 1):
        for K in range(2, M):
            for chiF in range(chi_lo, chi_hi + 1):
                build_stage_report(M, K, chiF)
                cases += 1
    return cases
