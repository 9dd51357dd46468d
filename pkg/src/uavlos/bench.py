"""
Monte Carlo experiment harness.

Sweeps write one CSV row per ``(value, seed, backend-or-policy, metric)``.
The first line is a versioned schema comment, the second the column
header. Rows are sorted before writing so the file only depends on the
spec and seeds; ``wall_time_s`` is the only non-deterministic column.

Relative difference metrics are ``|DA - SPA| / SPA`` averaged over the
(user, UAV) pairs of a seed with ``SPA > 0``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
import yaml

from .analytic import AnalyticLos
from .assoc import CoverageDisk, expected_throughput_embb, urllc_candidates
from .base import user_queries
from .channel import ChannelParams, draw_fading, link_throughput
from .exceptions import InvalidParams, ParseError
from .geometry import cuboid_array, segments_blocked
from .gridlos import GridLos
from .scene import (
    STREAM_FADING,
    Region,
    Scene,
    SceneParams,
    advance_users,
    generate_scene,
    stream,
    user_path,
)
from .shadowcast import ShadowPolygonLos, build_shadow_map

SCHEMA = "# uavlos-sweep v1"
COLUMNS = ("variable", "value", "seed", "backend_or_policy", "metric", "metric_value", "wall_time_s")
BACKENDS = ("analytic", "shadow", "grid")
POLICIES = ("embb_area", "urllc_radius", "max_throughput")
_BACKEND_ALIASES = {"aa": "analytic", "spa": "shadow", "da": "grid"}
_POLICY_ALIASES = {"embb": "embb_area", "urllc": "urllc_radius", "maxtp": "max_throughput"}
WORKERS_ENV = "UAVLOS_WORKERS"


@dataclass(frozen=True)
class SweepSpec:
    variable: Literal["lambda_b", "resolution_a", "uav_count"]
    values: tuple
    seeds: int = 100
    seed_offset: int = 0
    scene: SceneParams = field(default_factory=SceneParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    backends: tuple[str, ...] = BACKENDS
    policies: tuple[str, ...] = POLICIES
    cell: float = 0.5
    n_seg: int = 64
    area_mode: str = "flood"
    width_mode: str = "mean"
    slots: int = 3
    substeps: int = 20

    def __post_init__(self):
        if self.variable not in ("lambda_b", "resolution_a", "uav_count"):
            raise InvalidParams(f"unknown sweep variable {self.variable!r}")
        if len(self.values) == 0:
            raise InvalidParams("values must be non-empty")
        if self.seeds < 1:
            raise InvalidParams("seeds must be >= 1")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "backends", tuple(_BACKEND_ALIASES.get(b, b) for b in self.backends))
        object.__setattr__(self, "policies", tuple(_POLICY_ALIASES.get(p, p) for p in self.policies))
        if not set(self.backends) <= set(BACKENDS):
            raise InvalidParams(f"unknown backends {set(self.backends) - set(BACKENDS)}")
        if not set(self.policies) <= set(POLICIES):
            raise InvalidParams(f"unknown policies {set(self.policies) - set(POLICIES)}")
        if self.slots < 1 or self.substeps < 1:
            raise InvalidParams("slots and substeps must be >= 1")

    @property
    def seed_list(self) -> list[int]:
        return [self.seed_offset + i for i in range(self.seeds)]


def _params_from_dict(d: dict, cls):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ParseError(f"unknown {cls.__name__} keys {sorted(unknown)}")
    kw = dict(d)
    if cls is SceneParams:
        if "region" in kw and isinstance(kw["region"], dict):
            kw["region"] = Region(**kw["region"])
        for k in ("l_bounds", "uav_h_bounds"):
            if k in kw:
                kw[k] = tuple(kw[k])
    return cls(**kw)


def scene_params_from_dict(d: dict) -> SceneParams:
    return _params_from_dict(d or {}, SceneParams)


def load_sweep_spec(path) -> SweepSpec:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("sweep spec must be a mapping")
    doc = dict(doc)
    try:
        scene = _params_from_dict(doc.pop("scene", {}) or {}, SceneParams)
        channel = _params_from_dict(doc.pop("channel", {}) or {}, ChannelParams)
        return SweepSpec(scene=scene, channel=channel, **doc)
    except (TypeError, InvalidParams) as exc:
        raise ParseError(str(exc)) from exc


# --------------------------------------------------------------------------
# backend comparison (lambda_b / resolution_a sweeps)


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def _rel_diff(est, ref) -> float:
    mask = ref > 0
    if not mask.any():
        return math.nan
    return float(np.mean(np.abs(est[mask] - ref[mask]) / ref[mask]))


def _compare_backends(spec: SweepSpec, value, seed: int) -> list[tuple]:
    params = spec.scene
    cell = spec.cell
    if spec.variable == "lambda_b":
        params = dataclasses.replace(params, lambda_b=float(value))
    elif spec.variable == "resolution_a":
        cell = float(value)
    scene = generate_scene(params, seed, spec.channel)
    X = user_queries(scene)
    rows = []

    def emit(who, metric, val, wall):
        rows.append((spec.variable, value, seed, who, metric, float(val), wall))

    spa = ShadowPolygonLos(n_seg=spec.n_seg)
    _, t_fit = _timed(spa.fit, scene)
    spa_area, t_a = _timed(spa.embb_area, X)
    spa_rad, t_r = _timed(spa.urllc_radius, X)
    if "shadow" in spec.backends:
        emit("shadow", "fit", 0.0, t_fit)
        emit("shadow", "embb_area", spa_area.mean() if spa_area.size else math.nan, t_a)
        emit("shadow", "urllc_radius", spa_rad.mean() if spa_rad.size else math.nan, t_r)

    if "grid" in spec.backends:
        da = GridLos(cell=cell, area_mode=spec.area_mode).fit(scene)
        da_area, t_a = _timed(da.embb_area, X)
        da = GridLos(cell=cell, area_mode=spec.area_mode).fit(scene)  # fresh cache for fair timing
        da_rad, t_r = _timed(da.urllc_radius, X)
        emit("grid", "embb_area", da_area.mean() if da_area.size else math.nan, t_a)
        emit("grid", "urllc_radius", da_rad.mean() if da_rad.size else math.nan, t_r)
        emit("grid", "embb_area_rel_diff", _rel_diff(da_area, spa_area), 0.0)
        emit("grid", "urllc_radius_rel_diff", _rel_diff(da_rad, spa_rad), 0.0)

    if "analytic" in spec.backends:
        aa = AnalyticLos(
            lambda_b=params.lambda_b, l_bounds=params.l_bounds, gamma=params.gamma, width_mode=spec.width_mode
        ).fit(scene)
        aa_area, t_a = _timed(aa.embb_area, X)
        aa_rad, t_r = _timed(aa.urllc_radius, X)
        emit("analytic", "embb_area", aa_area.mean() if aa_area.size else math.nan, t_a)
        emit("analytic", "urllc_radius", aa_rad.mean() if aa_rad.size else math.nan, t_r)
        ratio = lambda est, ref: float(est.sum() / ref.sum()) if ref.sum() > 0 else math.nan  # noqa: E731
        emit("analytic", "embb_area_ratio", ratio(aa_area, spa_area), 0.0)
        emit("analytic", "urllc_radius_ratio", ratio(aa_rad, spa_rad), 0.0)
        # the other width convention, reported for attribution
        other = "expected" if spec.width_mode == "mean" else "mean"
        alt = AnalyticLos(lambda_b=params.lambda_b, l_bounds=params.l_bounds, gamma=params.gamma,
                          width_mode=other).fit(scene)
        emit("analytic", f"embb_area_w_{other}", alt.embb_area(X).mean() if X.size else math.nan, 0.0)
        emit("analytic", f"urllc_radius_w_{other}", alt.urllc_radius(X).mean() if X.size else math.nan, 0.0)
    return rows


# --------------------------------------------------------------------------
# episodes (uav_count sweep)


@dataclass
class EpisodeTables:
    """Per (slot, user, UAV) quantities; policies only differ in which UAV
    column they read, so one table serves every policy and UAV subset.

    Arrays have shape ``(slots, users, uavs)``.
    """

    embb_score: np.ndarray
    urllc_radius: np.ndarray
    urllc_ok: np.ndarray
    inst_tp: np.ndarray
    inst_ok: np.ndarray
    mean_tp: np.ndarray  # realised slot-mean throughput if served by that UAV
    los_frac: np.ndarray
    realized_radius: np.ndarray
    cover_cap: np.ndarray  # room left inside the coverage disk, R'_k - d'
    start_los: np.ndarray
    times: dict


def episode_tables(
    scene: Scene, slots: int, substeps: int = 20, n_seg: int = 64, maps=None, policies=POLICIES
) -> EpisodeTables:
    """Simulate ``slots`` slots of user motion and tabulate every UAV's
    scores and realised link quality.

    Fading for UAV ``k`` comes from stream ``(seed, fading, k, slot)`` so a
    scene restricted to its first UAVs reproduces the same draws.
    """
    boxes = cuboid_array(scene.buildings)
    t0 = time.perf_counter()
    if maps is None:
        maps = [build_shadow_map(scene, u) for u in scene.uavs]
    t_maps = time.perf_counter() - t0
    S, U, K = slots, len(scene.users), len(scene.uavs)
    shape = (S, U, K)
    tab = {name: np.zeros(shape) for name in
           ("embb_score", "urllc_radius", "inst_tp", "mean_tp", "los_frac", "realized_radius", "cover_cap")}
    for name in ("urllc_ok", "inst_ok", "start_los"):
        tab[name] = np.zeros(shape, dtype=bool)
    times = {"embb_area": t_maps, "urllc_radius": t_maps, "max_throughput": 0.0}
    disks = [CoverageDisk.of(u) for u in scene.uavs]

    cur = scene
    for s in range(S):
        fades = [draw_fading(scene.channel, stream(scene.seed, STREAM_FADING, k, cur.slot), (U, substeps))
                 for k in range(K)]
        for i, usr in enumerate(cur.users):
            g = usr.pos
            r_g = usr.speed * cur.dt
            path = user_path(usr, cur.dt, cur.region, substeps)[:-1]
            t_sub = np.arange(substeps) * cur.dt / substeps
            a3 = np.column_stack([path, np.zeros(len(path))])

            if "embb_area" in policies:
                t0 = time.perf_counter()
                for k, uav in enumerate(cur.uavs):
                    tab["embb_score"][s, i, k] = expected_throughput_embb(
                        uav, g, r_g, maps[k], cur.channel, n_seg)
                times["embb_area"] += time.perf_counter() - t0
            if "urllc_radius" in policies:
                t0 = time.perf_counter()
                for k, (r, ok) in enumerate(urllc_candidates(cur, usr, maps)):
                    tab["urllc_radius"][s, i, k] = r
                    tab["urllc_ok"][s, i, k] = ok
                times["urllc_radius"] += time.perf_counter() - t0

            for k, uav in enumerate(cur.uavs):
                t0 = time.perf_counter()
                disk = disks[k]
                blocked = segments_blocked(a3, np.array(uav.pos, dtype=float), boxes)
                if disk is None:
                    in_range = np.zeros(len(path), dtype=bool)
                else:
                    in_range = np.hypot(path[:, 0] - disk.center[0], path[:, 1] - disk.center[1]) <= disk.radius
                served = ~blocked & in_range
                tab["start_los"][s, i, k] = not blocked[0]
                tab["inst_ok"][s, i, k] = served[0]
                if served[0]:
                    tab["inst_tp"][s, i, k] = float(link_throughput(uav, path[:1], cur.channel)[0])
                times["max_throughput"] += time.perf_counter() - t0
                tp = link_throughput(uav, path, cur.channel, fades[k][i])
                tab["mean_tp"][s, i, k] = float(np.mean(np.where(served, tp, 0.0)))
                tab["los_frac"][s, i, k] = float(np.mean(served))
                lost = np.flatnonzero(~served)
                reach = usr.speed * t_sub[lost[0]] if len(lost) else r_g
                tab["realized_radius"][s, i, k] = min(reach, r_g)
                tab["cover_cap"][s, i, k] = 0.0 if disk is None else max(0.0, disk.radius - disk.distance(g))
        cur = advance_users(cur)
    return EpisodeTables(times=times, **tab)


def select(tables: EpisodeTables, policy: str, n_uavs: int | None = None) -> np.ndarray:
    """Chosen UAV index per ``(slot, user)`` (``-1`` for none), restricted to
    the first ``n_uavs`` UAVs. Ties go to the lowest index."""
    policy = _POLICY_ALIASES.get(policy, policy)
    K = tables.embb_score.shape[2] if n_uavs is None else n_uavs
    if policy == "embb_area":
        score, ok = tables.embb_score[..., :K], tables.embb_score[..., :K] > 0
    elif policy == "urllc_radius":
        score, ok = tables.urllc_radius[..., :K], tables.urllc_ok[..., :K]
    elif policy == "max_throughput":
        score, ok = tables.inst_tp[..., :K], tables.inst_ok[..., :K]
    else:
        raise ValueError(f"unknown policy {policy!r}")
    masked = np.where(ok, score, -np.inf)
    choice = np.argmax(masked, axis=-1)  # first maximum = lowest index
    any_ok = ok.any(axis=-1) if K else np.zeros(score.shape[:2], dtype=bool)
    return np.where(any_ok, choice, -1)


def policy_metrics(tables: EpisodeTables, choice: np.ndarray) -> dict[str, np.ndarray]:
    """Per ``(slot, user)`` realised metrics for a given association."""
    idx = np.maximum(choice, 0)[..., None]
    take = lambda a: np.take_along_axis(a, idx, axis=-1)[..., 0]  # noqa: E731
    none = choice < 0
    radius_start = np.minimum(take(tables.urllc_radius), take(tables.cover_cap))
    return {
        "throughput_bps": np.where(none, 0.0, take(tables.mean_tp)),
        "los_fraction": np.where(none, 0.0, take(tables.los_frac)),
        "urllc_radius": np.where(none, 0.0, radius_start),
        "urllc_radius_realized": np.where(none, 0.0, take(tables.realized_radius)),
        "start_los": np.where(none, False, take(tables.start_los)),
    }


def run_episode(scene: Scene, policy: str, slots: int, substeps: int = 20, n_seg: int = 64, maps=None):
    """Associate at each slot start, move users, and report per-slot metrics.

    Returns a list with one dict per slot holding the chosen UAV ids and
    the per-user and mean realised metrics.
    """
    if slots < 1:
        raise InvalidParams("slots must be >= 1")
    policy = _POLICY_ALIASES.get(policy, policy)
    tables = episode_tables(scene, slots, substeps, n_seg, maps, policies=(policy,))
    choice = select(tables, policy)
    m = policy_metrics(tables, choice)
    ids = np.array([u.id for u in scene.uavs])
    out = []
    for s in range(slots):
        row = {"slot": scene.slot + s,
               "uav_id": [int(ids[c]) if c >= 0 else None for c in choice[s]]}
        for name, arr in m.items():
            row[name] = arr[s].tolist()
            if name != "start_los":
                row[f"mean_{name}"] = float(np.mean(arr[s])) if arr.shape[1] else math.nan
        out.append(row)
    return out


def _episode_rows(spec: SweepSpec, seed: int) -> list[tuple]:
    kmax = int(max(spec.values))
    params = dataclasses.replace(spec.scene, uav_count=kmax)
    scene = generate_scene(params, seed, spec.channel)
    tables = episode_tables(scene, spec.slots, spec.substeps, spec.n_seg, policies=spec.policies)
    rows = []
    for value in spec.values:
        k = int(value)
        for pol in spec.policies:
            t0 = time.perf_counter()
            m = policy_metrics(tables, select(tables, pol, k))
            wall = tables.times[pol] * k / max(kmax, 1) + time.perf_counter() - t0
            for name in ("throughput_bps", "los_fraction", "urllc_radius", "urllc_radius_realized"):
                rows.append((spec.variable, value, seed, pol, name, float(np.mean(m[name])), wall))
    return rows


# --------------------------------------------------------------------------
# sweeps


def _task(args):
    spec, value, seed = args
    if spec.variable == "uav_count":
        return _episode_rows(spec, seed)
    return _compare_backends(spec, value, seed)


def sweep_rows(spec: SweepSpec, workers: int | None = None) -> list[tuple]:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    if spec.variable == "uav_count":
        tasks = [(spec, None, s) for s in spec.seed_list]
    else:
        tasks = [(spec, v, s) for s in spec.seed_list for v in spec.values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_task, tasks))
    else:
        chunks = [_task(t) for t in tasks]
    rows = [r for c in chunks for r in c]
    order = {v: i for i, v in enumerate(spec.values)}
    rows.sort(key=lambda r: (order[r[1]], r[2], r[3], r[4]))
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(rows: Sequence[tuple], out_path, spec: SweepSpec | None = None) -> None:
    buf = io.StringIO()
    note = (f" variable={spec.variable} seeds={spec.seeds} area_mode={spec.area_mode}"
            f" width_mode={spec.width_mode}") if spec else ""
    buf.write(f"{SCHEMA}{note} rel_diff=|DA-SPA|/SPA over pairs with SPA>0\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    try:
        Path(out_path).write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write sweep output {out_path}: {exc}") from exc


def run_sweep(spec: SweepSpec, out_path, workers: int | None = None) -> list[tuple]:
    """Run every ``(value, seed)`` of ``spec`` and write the CSV to ``out_path``."""
    rows = sweep_rows(spec, workers)
    write_rows(rows, out_path, spec)
    return rows


def read_rows(csv_path) -> list[dict]:
    text = Path(csv_path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if len(lines) < 2:
        raise ParseError("sweep CSV has no data rows")
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ParseError(f"unexpected CSV columns {reader.fieldnames}", line=2)
    out = []
    for lineno, r in enumerate(reader, start=3):
        try:
            out.append({
                "variable": r["variable"], "value": float(r["value"]), "seed": int(r["seed"]),
                "backend_or_policy": r["backend_or_policy"], "metric": r["metric"],
                "metric_value": float(r["metric_value"]), "wall_time_s": float(r["wall_time_s"]),
            })
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad CSV row: {exc}", line=lineno) from exc
    return out


def summarize(rows: list[dict], metric: str, column: str = "metric_value") -> dict[str, dict[float, tuple[float, float, int]]]:
    """``{series: {x: (mean, standard_error, n)}}`` for one metric, NaNs skipped."""
    groups: dict[str, dict[float, list[float]]] = {}
    for r in rows:
        if r["metric"] != metric:
            continue
        v = r[column]
        if math.isnan(v):
            continue
        groups.setdefault(r["backend_or_policy"], {}).setdefault(r["value"], []).append(v)
    out = {}
    for series, by_x in groups.items():
        out[series] = {}
        for x, vals in sorted(by_x.items()):
            a = np.asarray(vals)
            se = float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0
            out[series][x] = (float(a.mean()), se, len(a))
    return out


def emit_plot(csv_path, out_svg, metric: str | None = None, column: str = "metric_value") -> int:
    """Line chart of one metric per backend/policy with standard-error bars.

    Returns the number of series drawn.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = read_rows(csv_path)
    if metric is None:
        metrics = [r["metric"] for r in rows]
        for pref in ("embb_area", "throughput_bps", "urllc_radius"):
            if pref in metrics:
                metric = pref
                break
        else:
            metric = metrics[0]
    summary = summarize(rows, metric, column)
    if not summary:
        raise ParseError(f"no rows for metric {metric!r}")
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for series in sorted(summary):
        xs = sorted(summary[series])
        ys = [summary[series][x][0] for x in xs]
        es = [summary[series][x][1] for x in xs]
        ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label=series)
    ax.set_xlabel(rows[0]["variable"])
    ax.set_ylabel(metric if column == "metric_value" else f"{metric} {column}")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_svg, format="svg")
    plt.close(fig)
    return len(summary)


def timing_table(scene: Scene, cell: float = 0.5, n_seg: int = 64) -> list[tuple[str, str, float, float]]:
    """Mean per-query wall time of every backend on a scene:
    ``(backend, metric, mean_value, seconds_per_query)``."""
    X = user_queries(scene)
    out = []
    n = max(len(X), 1) * max(len(scene.uavs), 1)
    for name, est in (("analytic", AnalyticLos()), ("shadow", ShadowPolygonLos(n_seg=n_seg)),
                      ("grid", GridLos(cell=cell))):
        _, t_fit = _timed(est.fit, scene)
        area, t_a = _timed(est.embb_area, X)
        if name == "grid":
            est.fit(scene)
        rad, t_r = _timed(est.urllc_radius, X)
        out.append((name, "fit", math.nan, t_fit))
        out.append((name, "embb_area", float(area.mean()) if area.size else math.nan, t_a / n))
        out.append((name, "urllc_radius", float(rad.mean()) if rad.size else math.nan, t_r / n))
    return out
