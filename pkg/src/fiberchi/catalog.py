"""Built-in germ catalog.

Each entry bundles a germ file shipped with the package, the known fiber
Euler characteristic with a note on where that value comes from, pinned
sampling parameters that keep the full catalog run fast, and the list of
(stage, kind) measurements that ``catalog run`` performs.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Optional, Tuple

from .formulas import StageReport, build_stage_report
from .germs import MapGerm, parse_germ


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    summary: str
    # Pinned chi(F_f); None when the germ has no working tube (non-tame).
    chi_fiber: Optional[int]
    chi_note: str
    tame: bool
    tags: Tuple[str, ...]
    # Working radius for `catalog run`; skips the radius ladder search.
    epsilon: float
    # Per-cloud sample target.
    n_points: int
    # (stage, kind) pairs measured by `catalog run`.
    plan: Tuple[Tuple[int, str], ...]

    @property
    def resource_name(self) -> str:
        return self.name + ".germ"

    def load(self) -> MapGerm:
        text = (
            resources.files("fiberchi.data")
            .joinpath(self.resource_name)
            .read_text(encoding="utf-8")
        )
        germ = parse_germ(text)
        if germ.name != self.name:
            raise CatalogError(
                f"germ file for {self.name!r} declares name {germ.name!r}"
            )
        return germ

    def expected_report(self) -> Optional[StageReport]:
        if self.chi_fiber is None:
            return None
        germ = self.load()
        return build_stage_report(
            germ.source_dim,
            germ.target_dim,
            self.chi_fiber,
            isolated_critical_point=germ.flags.isolated_critical_point,
        )


_ENTRIES = (
    CatalogEntry(
        name="linear-3-2",
        summary="coordinate projection (x, y, z) -> (x, y); every set solvable by hand",
        chi_fiber=1,
        chi_note="fiber is a segment of a line, contractible",
        tame=True,
        tags=("submersion", "isolated-point", "exactly-solvable"),
        epsilon=0.5,
        n_points=400,
        plan=((1, "fiber"), (1, "boundary"), (1, "link"), (2, "boundary"), (2, "link")),
    ),
    CatalogEntry(
        name="zw-4-2",
        summary="real form of the complex product z*w; annulus fibers, Hopf link",
        chi_fiber=0,
        chi_note="fiber {zw = c} in a ball is an annulus",
        tame=True,
        tags=("isolated-point", "complex-product"),
        epsilon=0.5,
        n_points=1000,
        plan=((1, "boundary"), (1, "link"), (2, "fiber"), (2, "boundary"), (2, "link")),
    ),
    CatalogEntry(
        name="zwbar-4-2",
        summary="real form of z*conj(w); same chi data as zw-4-2, mirrored link",
        chi_fiber=0,
        chi_note="fiber is again an annulus",
        tame=True,
        tags=("isolated-point", "mixed-product"),
        epsilon=0.5,
        n_points=1000,
        plan=((1, "boundary"), (1, "link"), (2, "fiber"), (2, "boundary"), (2, "link")),
    ),
    CatalogEntry(
        name="ramified-t2",
        summary="complex squaring in (x, y) times an interval in z; two-sheeted fibers",
        chi_fiber=2,
        chi_note="fiber is two disjoint arcs, one per sheet of the square root",
        tame=True,
        tags=("ramified-cover-t2", "nonisolated-singular-set"),
        epsilon=0.5,
        n_points=800,
        plan=((1, "fiber"), (1, "boundary"), (1, "link"), (2, "fiber"), (2, "boundary"), (2, "link")),
    ),
    CatalogEntry(
        name="isolated-odd",
        summary="odd-dimensional source, isolated critical point; all stage fibers contractible",
        chi_fiber=1,
        chi_note="second component is strictly monotone in y, fiber is one arc",
        tame=True,
        tags=("isolated-point", "odd-source"),
        epsilon=0.5,
        n_points=1000,
        plan=((1, "fiber"), (1, "boundary"), (1, "link"), (2, "fiber"), (2, "boundary"), (2, "link")),
    ),
    CatalogEntry(
        name="icis-6-4",
        summary="real form of a graph-like complex map C^3 -> C^2; submersion with M - K = 2",
        chi_fiber=1,
        chi_note="components solve for (x1, y1, x2, y2) as graphs over the rest, fiber contractible",
        tame=True,
        tags=("ICIS-real-form", "submersion", "deep-stage-range"),
        epsilon=0.5,
        n_points=900,
        plan=((3, "boundary"), (4, "fiber"), (4, "boundary"), (4, "link")),
    ),
    CatalogEntry(
        name="nontame-demo",
        summary="rows of [df; dg] dependent along the x-axis; radius search must reject it",
        chi_fiber=None,
        chi_note="no tube: transversality to spheres fails at every radius",
        tame=False,
        tags=("non-tame-demo",),
        epsilon=0.5,
        n_points=0,
        plan=(),
    ),
)

ENTRIES = {entry.name: entry for entry in _ENTRIES}


def names() -> Tuple[str, ...]:
    return tuple(ENTRIES)


def get(name: str) -> CatalogEntry:
    try:
        return ENTRIES[name]
    except KeyError:
        known = ", ".join(ENTRIES)
        raise CatalogError(f"unknown catalog germ {name!r}; known: {known}") from None
