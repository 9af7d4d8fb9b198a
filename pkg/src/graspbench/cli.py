"""Command line front end: scene rendering, single-shot synthesis, benchmarks, reports.

Exit codes: 0 success, 1 input/config error, 2 no feasible grasp,
64 usage error. GRASPBENCH_SEED overrides any configured seed.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import __version__
from .errors import ConfigError, EmptyScene, GraspBenchError, NoFeasibleGrasp

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_GRASP = 2
EXIT_USAGE = 64


def _env_seed():
    raw = os.environ.get("GRASPBENCH_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"GRASPBENCH_SEED must be an integer, got {raw!r}", key="GRASPBENCH_SEED")


@click.group(name="graspbench")
@click.version_option(version=__version__, prog_name="graspbench")
def cli():
    """Planar grasp synthesis and benchmarking on synthetic depth scenes."""


@cli.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False),
              help="Depth PNG to write (intrinsics sidecar goes next to it).")
@click.option("--seed", type=int, default=None, help="Override the scene noise seed.")
@click.option("--ply", type=click.Path(dir_okay=False), default=None,
              help="Also export the deprojected point cloud as ASCII PLY.")
def scene(config, output, seed, ply):
    """Render a scene TOML to a 16-bit depth PNG plus intrinsics sidecar."""
    from dataclasses import replace

    from .config import load_scene
    from .depth_io import sidecar_path, write_depth_png, write_intrinsics_sidecar, write_ply
    from .perception import deproject
    from .scene import render_depth

    spec, intr, campose = load_scene(config)
    seed = seed if seed is not None else _env_seed()
    if seed is not None:
        spec = replace(spec, noise=replace(spec.noise, seed=seed))
    depth = render_depth(spec, intr, campose)
    write_depth_png(output, depth)
    write_intrinsics_sidecar(sidecar_path(output), intr, campose)
    if ply:
        write_ply(ply, deproject(depth, intr, campose))
    click.echo(f"wrote {output} and {sidecar_path(output)}")


@cli.command()
@click.argument("depth_png", type=click.Path(exists=True, dir_okay=False))
@click.option("--intrinsics", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Intrinsics sidecar (default: <depth>.intrinsics.json).")
@click.option("-a", "--algorithm", type=click.Choice(["topsurface", "mask"]), default="topsurface",
              show_default=True)
@click.option("--gripper-config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="TOML file with a [gripper] table.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Grasp JSON path (default: stdout).")
@click.option("--score-field", type=click.Path(dir_okay=False), default=None,
              help="For the mask planner: write the score field as 16-bit PNG.")
def synth(depth_png, intrinsics, algorithm, gripper_config, output, score_field):
    """Synthesize one grasp from a depth image; prints the grasp JSON record."""
    from .depth_io import read_depth_png, read_intrinsics_sidecar, sidecar_path
    from .gripper import GripperModel
    from .pipeline import PlannerSettings, crop_to_object, perceive, plan_grasp

    image = read_depth_png(depth_png)
    side = intrinsics if intrinsics else sidecar_path(depth_png)
    intr, campose = read_intrinsics_sidecar(side)
    gripper = GripperModel()
    if gripper_config:
        import sys as _sys
        if _sys.version_info >= (3, 11):
            import tomllib as _toml
        else:
            import tomli as _toml
        with open(gripper_config, "rb") as fh:
            doc = _toml.load(fh)
        gripper = GripperModel.from_dict(doc.get("gripper", doc))
    settings = PlannerSettings()
    grasp = plan_grasp(algorithm, image, intr, campose, gripper, settings)
    record = json.dumps(grasp.to_json_dict())
    if output:
        Path(output).write_text(record + "\n", encoding="utf-8")
    click.echo(record)
    if score_field and algorithm == "mask":
        from PIL import Image

        from .mask_planner import synthesize_mask

        _, heightmap = perceive(image, intr, campose, settings)
        cropped = crop_to_object(heightmap, settings.crop_margin, settings.min_height)
        _, field = synthesize_mask(cropped, gripper, return_field=True)
        Image.fromarray(field.to_uint16()).save(score_field, format="PNG")
        click.echo(f"wrote score field {score_field}", err=True)


@cli.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output-dir", type=click.Path(file_okay=False), default=None,
              help="Report directory (overrides the config).")
@click.option("--workers", type=int, default=None, help="Parallel scene workers (0 = auto).")
@click.option("--seed", type=int, default=None, help="Override the benchmark seed.")
def bench(config, output_dir, workers, seed):
    """Run the benchmark protocol from a TOML config and write the report bundle."""
    from .bench import run_benchmark
    from .config import load_benchmark_config

    overrides = {}
    if output_dir is not None:
        overrides["output_dir"] = output_dir
    if workers is not None:
        overrides["workers"] = workers
    env_seed = _env_seed()
    if seed is not None:
        overrides["seed"] = seed
    elif env_seed is not None:
        overrides["seed"] = env_seed
    cfg = load_benchmark_config(config, overrides)
    report = run_benchmark(cfg)
    click.echo(_totals_table(report))
    if cfg.output_dir:
        click.echo(f"report written to {cfg.output_dir}")
    for w in report.warnings:
        click.echo(f"note: {w}", err=True)


@cli.command("report")
@click.argument("trials_jsonl", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output-dir", required=True, type=click.Path(file_okay=False))
def report_cmd(trials_jsonl, output_dir):
    """Re-aggregate a trials JSONL into the CSV/SVG/figure bundle."""
    from .bench import TrialRecord, aggregate
    from .gripper import GraspPose
    from .oracle import PickOutcome
    from .report import write_report

    trials = []
    for n, line in enumerate(Path(trials_jsonl).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            outcome = PickOutcome(
                lifted=d["outcome"]["lifted"],
                yaw_pass=d["outcome"]["yaw_pass"],
                shake_pass=d["outcome"]["shake_pass"],
                failure_reason=d["outcome"]["failure_reason"],
            )
            trials.append(
                TrialRecord(
                    object_id=d["object_id"],
                    pose_index=int(d["pose_index"]),
                    algorithm=d["algorithm"],
                    grasp=GraspPose.from_json_dict(d["grasp"]) if d.get("grasp") else None,
                    outcome=outcome,
                    score=int(d["score"]),
                    planner_time=0.0,
                    failure_reason=d.get("failure_reason", "none"),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad trial record: {exc}", key=f"{trials_jsonl}:{n}") from exc
    rep = aggregate(trials)
    write_report(rep, output_dir)
    click.echo(_totals_table(rep))
    click.echo(f"report written to {output_dir}")


def _totals_table(report) -> str:
    ids, algs = report.object_ids, report.algorithms
    width = max([len(o) for o in ids] + [6])
    lines = [" " * width + "  " + "  ".join(f"{a:>12s}" for a in algs)]
    for obj in ids:
        cells = "  ".join(f"{report.object_scores.get((a, obj), 0):>12d}" for a in algs)
        lines.append(f"{obj:<{width}s}  {cells}")
    lines.append(f"{'TOTAL':<{width}s}  " + "  ".join(f"{report.totals[a]:>12d}" for a in algs))
    return "\n".join(lines)


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Exit as exc:  # --help / --version
        return int(exc.exit_code)
    except click.UsageError as exc:
        if exc.__class__.__name__ == "NoArgsIsHelpError":
            click.echo(exc.format_message())
            return EXIT_OK
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT
    except click.exceptions.Abort:
        return EXIT_INPUT
    except NoFeasibleGrasp as exc:
        click.echo(f"no feasible grasp: {exc}", err=True)
        return EXIT_NO_GRASP
    except EmptyScene as exc:
        click.echo(f"no feasible grasp: {exc}", err=True)
        return EXIT_NO_GRASP
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_INPUT
    except GraspBenchError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
