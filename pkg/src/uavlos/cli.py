"""Command-line entry point (``uavlos``)."""

from __future__ import annotations

import csv
import dataclasses
import math
import sys
from pathlib import Path

import click
import yaml

from .analytic import AnalyticLos
from .assoc import EmbbAssociator, MaxThroughputAssociator, UrllcAssociator
from .bench import WORKERS_ENV, emit_plot, load_sweep_spec, run_sweep, scene_params_from_dict, timing_table
from .channel import ChannelParams
from .exceptions import ParseError, UavLosError
from .gridlos import GridLos
from .scene import generate_scene
from .scenefile import load_scene, save_scene
from .shadowcast import ShadowPolygonLos

_ASSOCIATORS = {"embb": EmbbAssociator, "urllc": UrllcAssociator, "maxtp": MaxThroughputAssociator}


def _backend(name: str, cell: float, nseg: int):
    if name == "aa":
        return AnalyticLos()
    if name == "spa":
        return ShadowPolygonLos(n_seg=nseg)
    return GridLos(cell=cell)


def _channel_overrides(pairs) -> dict:
    out = {}
    names = {f.name for f in dataclasses.fields(ChannelParams)}
    for item in pairs:
        key, sep, val = item.partition("=")
        key = key.strip()
        if not sep or key not in names:
            raise click.BadParameter(f"expected KEY=VALUE with KEY in {sorted(names)}, got {item!r}",
                                     param_hint="--channel")
        try:
            out[key] = float(val)
        except ValueError:
            raise click.BadParameter(f"{key} needs a number, got {val!r}", param_hint="--channel")
    return out


def _apply_channel(scene, pairs):
    over = _channel_overrides(pairs)
    if not over:
        return scene
    try:
        return dataclasses.replace(scene, channel=dataclasses.replace(scene.channel, **over))
    except UavLosError as exc:
        raise click.ClickException(str(exc))


_channel_option = click.option(
    "--channel", "channel_kv", multiple=True, metavar="KEY=VALUE",
    help="Override a link-budget constant, e.g. --channel bandwidth_hz=4e8. Repeatable.")


def _seed_option(default=0):
    return click.option("--seed", type=int, default=default, show_default=True, help="Random seed.")


@click.group()
def main():
    """LoS regions for mmWave UAV links under building blockage."""


@main.command()
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="YAML mapping of scene parameters; defaults are used when omitted.")
@_seed_option()
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_channel_option
def generate(params_path, seed, out, channel_kv):
    """Sample a random scene and write it as a scenario file."""
    doc = {}
    if params_path:
        try:
            doc = yaml.safe_load(Path(params_path).read_text()) or {}
        except yaml.YAMLError as exc:
            raise click.ClickException(f"invalid YAML: {exc}")
    try:
        params = scene_params_from_dict(doc)
    except (TypeError, UavLosError) as exc:
        raise click.ClickException(str(exc))
    scene = _apply_channel(generate_scene(params, seed), channel_kv)
    save_scene(scene, out)
    click.echo(f"{len(scene.buildings)} buildings, {len(scene.uavs)} UAVs, {len(scene.users)} users -> {out}")


def _query(kind, scene_path, user, uav, backend, cell, nseg, channel_kv):
    try:
        scene = _apply_channel(load_scene(scene_path), channel_kv)
        est = _backend(backend, cell, nseg).fit(scene)
        rep = est.report(user, uav)
    except (UavLosError, KeyError) as exc:
        raise click.ClickException(str(exc))
    value = rep.embb_area if kind == "area" else rep.urllc_radius
    click.echo(f"{value!r}")


_query_options = [
    click.option("--scene", "scene_path", type=click.Path(exists=True, dir_okay=False), required=True),
    click.option("--user", type=int, required=True, help="User id."),
    click.option("--uav", type=int, required=True, help="UAV id."),
    click.option("--backend", type=click.Choice(["aa", "spa", "da"]), default="spa", show_default=True),
    click.option("--cell", type=float, default=0.5, show_default=True, help="Grid resolution for da."),
    click.option("--nseg", type=int, default=64, show_default=True, help="Mobility disk polygon vertices."),
    _seed_option(),
    _channel_option,
]


def _with_query_options(fn):
    for opt in reversed(_query_options):
        fn = opt(fn)
    return fn


@main.command()
@_with_query_options
def area(scene_path, user, uav, backend, cell, nseg, seed, channel_kv):
    """eMBB LoS area (m^2) of one user towards one UAV."""
    _query("area", scene_path, user, uav, backend, cell, nseg, channel_kv)


@main.command()
@_with_query_options
def radius(scene_path, user, uav, backend, cell, nseg, seed, channel_kv):
    """URLLC LoS radius (m) of one user towards one UAV."""
    _query("radius", scene_path, user, uav, backend, cell, nseg, channel_kv)


@main.command()
@click.option("--scene", "scene_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--policy", type=click.Choice(sorted(_ASSOCIATORS)), required=True)
@_seed_option()
@_channel_option
def associate(scene_path, policy, seed, channel_kv):
    """Print one CSV decision row per user."""
    try:
        scene = _apply_channel(load_scene(scene_path), channel_kv)
    except UavLosError as exc:
        raise click.ClickException(str(exc))
    est = _ASSOCIATORS[policy]().fit(scene)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["user_id", "policy", "uav_id", "score"] + [f"score_uav_{u.id}" for u in scene.uavs])
    for usr in scene.users:
        res = est.associate(usr)
        w.writerow([usr.id, res.policy, "" if res.uav_id is None else res.uav_id, repr(res.score)]
                   + [repr(s) for _, s in res.per_uav_scores])


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--seeds", type=int, default=None, help="Override the number of seeds.")
@click.option("--seed", type=int, default=None, help="Override the first seed.")
@click.option("--workers", type=int, default=None, help=f"Worker processes (default ${WORKERS_ENV} or 1).")
def sweep(spec_path, out, seeds, seed, workers):
    """Run a parameter sweep and write CSV rows."""
    try:
        spec = load_sweep_spec(spec_path)
        if seeds is not None:
            spec = dataclasses.replace(spec, seeds=seeds)
        if seed is not None:
            spec = dataclasses.replace(spec, seed_offset=seed)
        rows = run_sweep(spec, out, workers)
    except (UavLosError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{len(rows)} rows -> {out}")


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--metric", default=None, help="Metric to plot; picks a primary one when omitted.")
@_seed_option()
def plot(in_path, out, metric, seed):
    """Render a sweep CSV as an SVG line chart."""
    try:
        n = emit_plot(in_path, out, metric)
    except ParseError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{n} series -> {out}")


@main.command()
@click.option("--scene", "scene_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--cell", type=float, default=0.5, show_default=True)
@click.option("--nseg", type=int, default=64, show_default=True)
@_seed_option()
@_channel_option
def bench(scene_path, cell, nseg, seed, channel_kv):
    """Per-query timing of every backend on a scene."""
    try:
        scene = _apply_channel(load_scene(scene_path), channel_kv)
    except UavLosError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{'backend':<10}{'metric':<14}{'mean':>14}{'seconds':>14}")
    for name, metric, mean, secs in timing_table(scene, cell, nseg):
        m = "" if math.isnan(mean) else f"{mean:.4f}"
        click.echo(f"{name:<10}{metric:<14}{m:>14}{secs:>14.3e}")


if __name__ == "__main__":  # pragma: no cover
    main()
