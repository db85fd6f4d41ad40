"""Batch entry points: pre-processing, interpolation, evaluation, export, serving.

Exit codes: 0 success, 1 validation failure (single-line machine-parsable
message on stderr), 2 I/O failure. Unknown flags are fatal.
"""
from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .boxes import interpolate_track
from .calib import Camera, DepthMap, DistortionCoeffs
from .errors import AnnotationError, IoFailure, MissingFile
from .metrics import compare_interpolation, evaluate_dataset, render_report
from .project import (
    AnnotationProject,
    export_annotations,
    load_project,
    save_project,
    tracks_from_json,
    _read_json,
)
from .undistort import compute_optimal_camera_matrix, undistort_depth, undistort_rgb
from . import pngio


@click.group()
def cli():
    """Semi-automatic RGB-D annotation engine."""


@cli.command()
@click.option("--project", "project_path", required=True, type=click.Path())
@click.option(
    "--write-calib/--no-write-calib",
    default=False,
    help="Update the project manifest and calibration to the undistorted frames.",
)
@click.option("--out", "out_dir", default=None, type=click.Path(), help="Output directory (default: frames/undistorted inside the project).")
def undistort(project_path, write_calib, out_dir):
    """Undistort all RGB and depth frames, preserving source pixels."""
    project = load_project(project_path)
    rgb_cam = project.rig.rgb
    depth_cam = project.rig.depth
    new_rgb_intr, scale = compute_optimal_camera_matrix(
        rgb_cam.intrinsics, rgb_cam.distortion
    )
    out = Path(out_dir) if out_dir else project.root / "frames" / "undistorted"
    out.mkdir(parents=True, exist_ok=True)
    new_depth_intr = None
    new_refs = []
    for i in range(project.frame_count()):
        rgb = undistort_rgb(
            project.load_rgb(i), rgb_cam.intrinsics, rgb_cam.distortion, new_rgb_intr
        )
        depth, new_depth_intr = undistort_depth(
            project.load_depth(i), depth_cam.intrinsics, depth_cam.distortion
        )
        rgb_name = f"rgb_{i:06d}.png"
        depth_name = f"depth_{i:06d}.png"
        pngio.write_rgb(out / rgb_name, rgb)
        pngio.write_depth(out / depth_name, depth.values)
        rel = out.relative_to(project.root) if out.is_relative_to(project.root) else out
        new_refs.append((f"{rel}/{rgb_name}", f"{rel}/{depth_name}"))
    click.echo(
        f"undistorted {project.frame_count()} frame pairs into {out} "
        f"(rgb scale {scale:.4f}, new rgb size {new_rgb_intr.width}x{new_rgb_intr.height})"
    )
    if write_calib:
        from .project import FrameRef

        project.frames = [FrameRef(r, d) for r, d in new_refs]
        project.rig = replace(
            project.rig,
            rgb=Camera(new_rgb_intr, DistortionCoeffs()),
            depth=Camera(new_depth_intr, DistortionCoeffs()),
        )
        project.undistorted = True
        save_project(project)
        click.echo("calibration and manifest updated")


@cli.command()
@click.option("--project", "project_path", required=True, type=click.Path())
@click.option("--epsilon", type=float, default=None, help="Center-motion threshold in meters.")
@click.option("--mode", type=click.Choice(["linear", "cubic", "hybrid"]), default="hybrid")
@click.option("--out", "out_path", default=None, type=click.Path())
def interpolate(project_path, epsilon, mode, out_path):
    """Materialize per-frame boxes for every track."""
    project = load_project(project_path)
    eps = epsilon if epsilon is not None else project.epsilon
    project.epsilon = eps
    total = 0
    for track in project.tracks.values():
        if len(track.keyframes) >= 2:
            total += len(interpolate_track(track, eps, mode=mode))
        else:
            total += len(track.keyframes)
    paths = export_annotations(
        project, "flat_per_frame", Path(out_path) if out_path else None
    )
    click.echo(f"wrote {total} boxes to {paths[0]}")


def _load_annotation_source(path: str):
    """A project directory (tracks + masks) or a bare annotations document."""
    p = Path(path)
    if p.is_dir():
        project = load_project(p)
        return project.tracks, project.masks.as_binary_dict(), project.epsilon
    tracks, epsilon = tracks_from_json(_read_json(p, "annotations"))
    return tracks, {}, epsilon


@cli.command()
@click.option("--user", "user_path", required=True, type=click.Path())
@click.option("--truth", "truth_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
def evaluate(user_path, truth_path, out_path):
    """Score one annotation set against a reference set."""
    user_tracks, user_masks, epsilon = _load_annotation_source(user_path)
    truth_tracks, truth_masks, _ = _load_annotation_source(truth_path)
    ev = evaluate_dataset(
        user_tracks, truth_tracks, user_masks, truth_masks or None, epsilon
    )
    text = render_report(ev)
    click.echo(text, nl=False)
    if out_path:
        out = Path(out_path)
        with open(out.with_suffix(".json"), "w", encoding="utf-8") as fh:
            json.dump(ev.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        out.with_suffix(".txt").write_text(text)
        click.echo(f"report written to {out.with_suffix('.json')} and {out.with_suffix('.txt')}")


@cli.command("compare-interp")
@click.option("--project", "project_path", required=True, type=click.Path())
@click.option("--truth", "truth_path", required=True, type=click.Path())
@click.option("--epsilon", type=float, default=None)
@click.option("--out", "out_path", default=None, type=click.Path())
def compare_interp(project_path, truth_path, epsilon, out_path):
    """Compare linear / cubic / hybrid interpolation against dense truth."""
    project = load_project(project_path)
    eps = epsilon if epsilon is not None else project.epsilon
    truth_tracks, _ = tracks_from_json(_read_json(Path(truth_path), "annotations"))
    rows = {}
    for tid, track in sorted(project.tracks.items()):
        if len(track.keyframes) < 2 or tid not in truth_tracks:
            continue
        truth_track = truth_tracks[tid]
        dense = {}
        if len(truth_track.keyframes) >= 2:
            dense = {b.frame_index: b for b in interpolate_track(truth_track, eps)}
        else:
            dense = dict(truth_track.keyframes)
        rows[tid] = compare_interpolation(track, dense, epsilon=eps)
    if not rows:
        raise AnnotationError("no track present in both project and truth")
    header = f"{'track':<12} {'mode':<8} {'ATE':>10} {'ASE':>10}"
    click.echo(header)
    click.echo("-" * len(header))
    for tid, modes in rows.items():
        for mode in ("linear", "cubic", "hybrid"):
            m = modes[mode]
            click.echo(f"{tid:<12} {mode:<8} {m['ate']:>10.5f} {m['ase']:>10.5f}")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
            fh.write("\n")


@cli.command()
@click.option("--project", "project_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["flat_per_frame", "masks_png"]), required=True)
@click.option("--out", "out_dir", default=None, type=click.Path())
def export(project_path, fmt, out_dir):
    """Export interpolated boxes or indexed instance masks."""
    project = load_project(project_path)
    paths = export_annotations(project, fmt, Path(out_dir) if out_dir else None)
    for p in paths:
        click.echo(str(p))


@cli.command()
@click.option("--project", "project_path", required=True, type=click.Path())
@click.option("--listen", default="127.0.0.1:8000", help="host:port to bind.")
def serve(project_path, listen):
    """Serve the HTTP annotation API."""
    from .server import serve as run_server

    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise AnnotationError(f"--listen expects host:port, got {listen!r}")
    run_server(project_path, host=host, port=int(port))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except (MissingFile, IoFailure) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except AnnotationError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
