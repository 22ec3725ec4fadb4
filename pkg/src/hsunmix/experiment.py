"""Monte-Carlo experiment harness.

An experiment sweeps algorithm variants over noise levels, cluster counts,
and repeated runs on freshly generated synthetic scenes, then writes a tidy
per-run CSV plus an aggregate CSV of per-cell means. Every random ingredient
is derived from the master seed and the cell coordinates, so any cell can be
reproduced in isolation and scenes are shared by all variants of a given
(snr, run) pair for paired comparisons.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .clustering import fcm
from .initialize import fcls_abundances, random_init, vca
from .metrics import evaluate
from .synth import generate_synthetic
from .types import UnmixingConfig, as_matrix
from .unmix import AlgorithmVariant, run_unmixing

RUN_COLUMNS = (
    "variant",
    "snr_db",
    "clusters",
    "run",
    "rms_sad",
    "rms_aad",
    "iterations",
    "stop_reason",
)
AGGREGATE_COLUMNS = ("variant", "snr_db", "clusters", "rms_sad", "rms_aad")

# seed stream tags
_SCENE, _FCM, _INIT, _SIGNATURES = 0, 1, 2, 3

VARIANT_ALIASES = {"proposed": AlgorithmVariant.CLUSTERED_SPARSE_DISTRIBUTED.value}


def resolve_variant(name: str) -> str:
    """Map CLI spellings (including the ``proposed`` alias) to variant names."""
    name = name.strip()
    name = VARIANT_ALIASES.get(name, name)
    return AlgorithmVariant(name).value


@dataclass(frozen=True)
class ExperimentSpec:
    """Full description of one experiment sweep."""

    variants: Tuple[str, ...] = (AlgorithmVariant.CLUSTERED_SPARSE_DISTRIBUTED.value,)
    snr_levels: Tuple[float, ...] = (15.0, 20.0, 25.0, 30.0, 35.0)
    cluster_counts: Tuple[int, ...] = (6,)
    runs: int = 20
    width: int = 40
    height: int = 40
    endmembers: int = 6
    patch: int = 8
    filter_size: int = 7
    purity_cap: float = 0.8
    mu: float = 0.02
    eta: float = 0.1
    q: float = 1.0
    q_lq: float = 0.5
    sparsity_weight: Optional[float] = None
    max_iter: int = 1000
    eps: float = 1e-8
    init: str = "vca"
    fcm_m: float = 2.0
    fcm_tol: float = 1e-6
    fcm_max_iter: int = 300
    seed: int = 0
    fix_signatures: bool = False
    library: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(resolve_variant(v) for v in self.variants))
        object.__setattr__(self, "snr_levels", tuple(float(s) for s in self.snr_levels))
        object.__setattr__(self, "cluster_counts", tuple(int(c) for c in self.cluster_counts))
        if not self.variants or not self.snr_levels or not self.cluster_counts:
            raise ValueError("variants, snr_levels, and cluster_counts must be nonempty")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.init not in ("vca", "random"):
            raise ValueError("init must be 'vca' or 'random'")
        if min(self.cluster_counts) < 1:
            raise ValueError("cluster counts must be positive")

    @property
    def n_cells(self) -> int:
        return len(self.variants) * len(self.snr_levels) * len(self.cluster_counts) * self.runs


_SPEC_LIST_KEYS = {"variants", "snr_levels", "cluster_counts"}
_SPEC_INT_KEYS = {
    "runs", "width", "height", "endmembers", "patch", "filter_size",
    "max_iter", "fcm_max_iter", "seed",
}
_SPEC_FLOAT_KEYS = {
    "purity_cap", "mu", "eta", "q", "q_lq", "sparsity_weight", "eps",
    "fcm_m", "fcm_tol",
}
_SPEC_STR_KEYS = {"init", "library"}
_SPEC_BOOL_KEYS = {"fix_signatures"}


def parse_experiment_spec(text: str) -> ExperimentSpec:
    """Parse the flat key-value experiment grammar.

    One ``key = value`` pair per line; ``#`` starts a comment; blank lines
    are ignored. List-valued keys take comma-separated entries.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _SPEC_LIST_KEYS:
                items = [v.strip() for v in val.split(",") if v.strip()]
                if key == "variants":
                    values[key] = tuple(items)
                elif key == "snr_levels":
                    values[key] = tuple(float(v) for v in items)
                else:
                    values[key] = tuple(int(v) for v in items)
            elif key in _SPEC_INT_KEYS:
                values[key] = int(val)
            elif key in _SPEC_FLOAT_KEYS:
                values[key] = None if val.lower() == "none" else float(val)
            elif key in _SPEC_BOOL_KEYS:
                if val.lower() not in ("true", "false"):
                    raise ValueError(f"expected true/false, got {val!r}")
                values[key] = val.lower() == "true"
            elif key in _SPEC_STR_KEYS:
                values[key] = None if val.lower() == "none" else val
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return ExperimentSpec(**values)


def derive_seed(master: int, *indices: int) -> int:
    """Deterministic child seed for a cell coordinate tuple."""
    state = np.random.SeedSequence([int(master), *[int(i) for i in indices]])
    return int(state.generate_state(1, np.uint32)[0])


def _cell_library(spec: ExperimentSpec, library: np.ndarray) -> np.ndarray:
    if not spec.fix_signatures:
        return library
    rng = np.random.default_rng(derive_seed(spec.seed, _SIGNATURES))
    chosen = np.sort(rng.choice(library.shape[1], size=spec.endmembers, replace=False))
    return library[:, chosen]


def run_cell(
    spec: ExperimentSpec,
    library: np.ndarray,
    variant_idx: int,
    snr_idx: int,
    cluster_idx: int,
    run: int,
) -> dict:
    """Run a single (variant, snr, cluster count, run) cell and score it.

    The scene and initialization seeds depend only on (snr, run) so that all
    variants and cluster counts see the same data and starting point.
    """
    variant = spec.variants[variant_idx]
    snr = spec.snr_levels[snr_idx]
    n_clusters = spec.cluster_counts[cluster_idx]

    scene = generate_synthetic(
        _cell_library(spec, library),
        spec.endmembers,
        width=spec.width,
        height=spec.height,
        patch=spec.patch,
        filter_size=spec.filter_size,
        snr_db=snr,
        purity_cap=spec.purity_cap,
        seed=derive_seed(spec.seed, _SCENE, snr_idx, run),
    )

    init_seed = derive_seed(spec.seed, _INIT, snr_idx, run)
    if spec.init == "vca":
        A0 = vca(scene.Y, spec.endmembers, seed=init_seed)
        S0 = fcls_abundances(scene.Y, A0)
    else:
        A0, S0 = random_init(scene.Y.n_bands, spec.endmembers, scene.Y.n_pixels, seed=init_seed)

    cfg = UnmixingConfig(
        mu=spec.mu,
        eta=spec.eta,
        q=spec.q_lq if variant == AlgorithmVariant.LQ_NMF.value else spec.q,
        sparsity_weight=spec.sparsity_weight,
        max_iter=spec.max_iter,
        eps=spec.eps,
        clusters=n_clusters,
        seed=spec.seed,
        variant=variant,
    )
    clusters = None
    if variant == AlgorithmVariant.CLUSTERED_SPARSE_DISTRIBUTED.value:
        clusters = fcm(
            scene.Y,
            n_clusters,
            m=spec.fcm_m,
            tol=spec.fcm_tol,
            max_iter=spec.fcm_max_iter,
            seed=derive_seed(spec.seed, _FCM, snr_idx, cluster_idx, run),
        )
    result = run_unmixing(scene.Y, cfg, A0, S0, clusters)
    report = evaluate(scene.A_true, scene.S_true, result)
    return {
        "variant": variant,
        "snr_db": snr,
        "clusters": n_clusters,
        "run": run,
        "rms_sad": report.rms_sad,
        "rms_aad": report.rms_aad,
        "iterations": result.iterations_run,
        "stop_reason": result.stop_reason.value,
    }


def _cell_worker(args) -> dict:
    return run_cell(*args)


def run_experiment(
    spec: ExperimentSpec,
    library: np.ndarray,
    jobs: int = 1,
    progress: Optional[Callable[[int, int, dict], None]] = None,
) -> Tuple[List[dict], List[dict]]:
    """Run all cells of ``spec`` and return (per-run rows, aggregate rows).

    Rows come back in deterministic cell order (variants, then snr levels,
    then cluster counts, then runs) regardless of ``jobs``. Aggregates hold
    the per-cell means of rms_sad and rms_aad over the Monte-Carlo runs.
    """
    library = as_matrix(library, "library")
    cells = [
        (spec, library, vi, si, ci, run)
        for vi in range(len(spec.variants))
        for si in range(len(spec.snr_levels))
        for ci in range(len(spec.cluster_counts))
        for run in range(spec.runs)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_cell_worker, cells))
    else:
        rows = []
        for i, cell in enumerate(cells):
            row = _cell_worker(cell)
            rows.append(row)
            if progress is not None:
                progress(i + 1, len(cells), row)

    aggregates = []
    for vi in range(len(spec.variants)):
        for si in range(len(spec.snr_levels)):
            for ci in range(len(spec.cluster_counts)):
                group = [
                    r
                    for r in rows
                    if r["variant"] == spec.variants[vi]
                    and r["snr_db"] == spec.snr_levels[si]
                    and r["clusters"] == spec.cluster_counts[ci]
                ]
                aggregates.append(
                    {
                        "variant": spec.variants[vi],
                        "snr_db": spec.snr_levels[si],
                        "clusters": spec.cluster_counts[ci],
                        "rms_sad": sum(r["rms_sad"] for r in group) / len(group),
                        "rms_aad": sum(r["rms_aad"] for r in group) / len(group),
                    }
                )
    return rows, aggregates


def write_rows_csv(path, rows: Sequence[dict]) -> None:
    """Write per-run rows with the fixed tidy schema."""
    _write_csv(path, RUN_COLUMNS, rows)


def write_aggregate_csv(path, aggregates: Sequence[dict]) -> None:
    """Write aggregate means with the fixed schema."""
    _write_csv(path, AGGREGATE_COLUMNS, aggregates)


def _write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in columns])


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
