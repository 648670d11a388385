"""Command-line pipeline: generate, build, evaluate, predict, report.

Options can be preloaded from a flat ``key=value`` config file via
``--config``; explicit command-line flags win over file values.  Exit
codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import io
import os
import sys
import tempfile

import click

from . import __version__
from .bundle import ModelBundle
from .dataset import (
    LabelPolicy,
    build_dataset,
    load_manifest,
    save_manifest,
)
from .eventlog import EventLogError, serialize_annotations, serialize_states
from .experiment import (
    DEFAULT_GRIDS,
    MethodSpec,
    format_summary_table,
    records_csv,
    run_experiment,
    run_nontemporal_baseline,
    summary_csv,
)
from .fleet import FleetConfig, generate_fleet
from .folds import plan_folds
from .stats import pairwise_matrix

METHODS = ("hydra", "minirocket", "rocket", "ridge-tabular")


class DataError(click.ClickException):
    exit_code = 2


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config(ctx, param, value):
    """Read key=value lines into the default map; flags still override."""
    if value is None:
        return None
    defaults = {}
    with open(value) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise click.BadParameter(
                    f"{value}:{lineno}: expected key=value, got {line!r}"
                )
            key, _, val = line.partition("=")
            defaults[key.strip().replace("-", "_")] = val.strip()
    # apply the same defaults to every subcommand
    ctx.default_map = dict(ctx.default_map or {})
    ctx.default_map.update(defaults)
    for name in cli.commands:
        ctx.default_map.setdefault(name, {}).update(defaults)
    return value


@click.group()
@click.version_option(__version__)
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    callback=_load_config,
    expose_value=False,
    is_eager=True,
    help="Flat key=value config file; command-line flags override it.",
)
def cli():
    """Event-log failure prediction pipeline."""


@cli.command()
@click.option("--machines", default=40, show_default=True)
@click.option("--days", default=180, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--signature-strength", default=3.0, show_default=True)
@click.option("--mean-cycle-days", default=67.0, show_default=True)
@click.option(
    "--out-dir", default=".", show_default=True,
    type=click.Path(file_okay=False),
)
def generate(machines, days, seed, signature_strength, mean_cycle_days,
             out_dir):
    """Generate a synthetic fleet: states.csv, annotations.csv, truth."""
    config = FleetConfig(
        num_machines=machines,
        num_days=days,
        seed=seed,
        signature_strength=signature_strength,
        mean_cycle_days=mean_cycle_days,
    )
    try:
        events, records, truth = generate_fleet(config)
    except ValueError as exc:
        raise DataError(str(exc))
    os.makedirs(out_dir, exist_ok=True)
    buf = io.StringIO()
    serialize_states(events, buf)
    _atomic_write(os.path.join(out_dir, "states.csv"), buf.getvalue())
    buf = io.StringIO()
    serialize_annotations(records, buf)
    _atomic_write(os.path.join(out_dir, "annotations.csv"), buf.getvalue())
    _atomic_write(
        os.path.join(out_dir, "ground_truth.json"), truth.to_json() + "\n"
    )
    note = ""
    if signature_strength == 0:
        note = " (no planted signal)"
    click.echo(
        f"generated {machines} machines x {days} days, "
        f"{len(events)} events, "
        f"{sum(len(v) for v in truth.failure_dates.values())} failures"
        f"{note}"
    )


@cli.command()
@click.option("--states", required=True, type=click.Path(exists=True))
@click.option("--annotations", required=True, type=click.Path(exists=True))
@click.option(
    "--out", default="manifest.npz", show_default=True, type=click.Path()
)
@click.option("--horizon", default=7, show_default=True)
@click.option(
    "--include-failure-day/--no-include-failure-day",
    default=True,
    show_default=True,
)
@click.option(
    "--censored",
    type=click.Choice(["exclude", "label_negative"]),
    default="exclude",
    show_default=True,
)
@click.option(
    "--raw-counts", is_flag=True,
    help="Keep per-interval counts instead of cycle-cumulative values.",
)
def build(states, annotations, out, horizon, include_failure_day, censored,
          raw_counts):
    """Build the labeled machine-day dataset manifest."""
    policy = LabelPolicy(
        horizon_days=horizon,
        include_failure_day=include_failure_day,
        censored_handling=censored,
    )
    try:
        manifest = build_dataset(
            states, annotations, policy=policy, raw_counts=raw_counts
        )
    except EventLogError as exc:
        raise DataError(str(exc))
    if manifest.n_samples == 0:
        raise DataError("no samples built (empty states file?)")
    save_manifest(manifest, out)
    click.echo(manifest.describe())


@cli.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option(
    "--method", "methods", multiple=True,
    type=click.Choice(METHODS), default=("hydra",), show_default=True,
)
@click.option("--out-dir", default="results", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--k", default=5, show_default=True)
@click.option("--n-seeds", default=6, show_default=True)
@click.option("--base-seed", default=0, show_default=True)
@click.option("--alphas", default=None,
              help="Comma-separated ridge alpha grid override.")
@click.option("--num-features", default=None,
              help="Comma-separated feature-count grid (rocket/minirocket).")
@click.option("--groups", default=None,
              help="Comma-separated HYDRA group-count grid.")
@click.option("--kernels-per-group", default=None,
              help="Comma-separated HYDRA kernels-per-group grid.")
@click.option("--score-auc", is_flag=True,
              help="Compute AUC from decision scores instead of labels.")
@click.option("--use-diff/--no-use-diff", default=True, show_default=True,
              help="HYDRA: also transform the differenced series.")
@click.option("--balanced-weights", is_flag=True)
@click.option("--exact-wilcoxon", is_flag=True,
              help="Force exact p-values in the pairwise tests.")
@click.option("--save-models", is_flag=True,
              help="Also fit and save a deployable bundle per method.")
def evaluate(manifest_path, methods, out_dir, k, n_seeds, base_seed, alphas,
             num_features, groups, kernels_per_group, score_auc, use_diff,
             balanced_weights, exact_wilcoxon, save_models):
    """Run the repeated grouped CV protocol and the pairwise tests."""
    manifest = load_manifest(manifest_path)
    seeds = tuple(base_seed + i for i in range(n_seeds))
    try:
        plan = plan_folds(manifest.machines(), manifest.labels(), k=k,
                          seeds=seeds)
    except ValueError as exc:
        raise DataError(str(exc))

    auc_mode = "score" if score_auc else "hard"
    all_records = []
    summaries = {}
    for name in methods:
        grid = dict(DEFAULT_GRIDS[name])
        if alphas:
            grid["alpha"] = [float(a) for a in alphas.split(",")]
        if num_features and name in ("rocket", "minirocket"):
            grid["num_features"] = [int(v) for v in num_features.split(",")]
        if groups and name == "hydra":
            grid["n_groups"] = [int(v) for v in groups.split(",")]
        if kernels_per_group and name == "hydra":
            grid["kernels_per_group"] = [
                int(v) for v in kernels_per_group.split(",")
            ]
        if name == "ridge-tabular":
            records, summary = run_nontemporal_baseline(
                manifest, grid=grid, plan=plan,
                auc_mode=auc_mode, balanced=balanced_weights,
            )
        else:
            spec = MethodSpec(
                name=name,
                fixed_params={"use_diff": use_diff} if name == "hydra" else {},
            )
            records, summary = run_experiment(
                manifest, spec, grid=grid, plan=plan,
                auc_mode=auc_mode, balanced=balanced_weights,
            )
        all_records.extend(records)
        summaries[name] = summary
        if save_models:
            best_alpha = grid.get("alpha", [1.0])[-1]
            single = {
                key: values[0]
                for key, values in grid.items()
                if key != "alpha" and values
            }
            bundle = ModelBundle.fit(
                manifest, name, params=single, alpha=float(best_alpha),
                seed=base_seed, balanced=balanced_weights,
            )
            bundle.save(os.path.join(out_dir, f"{name}.model"))

    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(
        os.path.join(out_dir, "metrics.txt"),
        format_summary_table(summaries) + "\n",
    )
    _atomic_write(os.path.join(out_dir, "metrics.csv"),
                  summary_csv(summaries))
    _atomic_write(os.path.join(out_dir, "records.csv"),
                  records_csv(all_records))
    click.echo(format_summary_table(summaries))

    if len(methods) >= 2:
        table = {}
        for name in methods:
            rows = [r for r in all_records if r.method == name]
            rows.sort(key=lambda r: (r.seed, r.fold))
            table[name] = [r.auc for r in rows]
        matrix = pairwise_matrix(
            table, mode="exact" if exact_wilcoxon else "auto"
        )
        _atomic_write(
            os.path.join(out_dir, "pvalues.txt"),
            matrix.format_text() + "\n",
        )
        lines = ["method_a,method_b,pvalue,significant"]
        for a, b, p, sig in matrix.to_rows():
            lines.append(f"{a},{b},{p!r},{int(sig)}")
        _atomic_write(
            os.path.join(out_dir, "pvalues.csv"), "\n".join(lines) + "\n"
        )
        click.echo(matrix.format_text())
    else:
        click.echo("single method: pairwise p-value matrix omitted")


@cli.command()
@click.option("--model", "model_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--states", required=True, type=click.Path(exists=True))
@click.option("--out", default="-", show_default=True,
              help="Output CSV path, or - for stdout.")
def predict(model_dir, states, out):
    """Score every machine-day of a states file with a saved model."""
    bundle = ModelBundle.load(model_dir)
    try:
        rows = bundle.predict_states(states)
    except (EventLogError, ValueError) as exc:
        raise DataError(str(exc))
    lines = ["machine,date,score,label"]
    lines += [
        f"{machine},{date.isoformat()},{score!r},{label}"
        for machine, date, score, label in rows
    ]
    text = "\n".join(lines) + "\n"
    if out == "-":
        click.echo(text, nl=False)
    else:
        _atomic_write(out, text)


@cli.command()
@click.option("--results-dir", default="results", show_default=True,
              type=click.Path(exists=True, file_okay=False))
def report(results_dir):
    """Print the stored metrics table and p-value matrix."""
    shown = False
    for name in ("metrics.txt", "pvalues.txt"):
        path = os.path.join(results_dir, name)
        if os.path.exists(path):
            with open(path) as fh:
                click.echo(fh.read(), nl=False)
            click.echo("")
            shown = True
    if not shown:
        raise DataError(f"no report files found in {results_dir}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return exc.exit_code
    except click.exceptions.Abort:
        return 1
    except (EventLogError, FileNotFoundError, ValueError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"internal error: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
