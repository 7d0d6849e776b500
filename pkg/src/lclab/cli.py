"""Command-line entry point.

Subcommands: gen-model, compress, sweep, simulate, report.
Exit codes: 0 success, 2 malformed config/usage, 3 I/O failure,
4 internal invariant breach. Failures print a single machine-parseable
line `error: <kind>: <message>` on stderr.

--threads falls back to the LCLAB_THREADS environment variable. Output
directories are guarded by a lockfile so concurrent invocations cannot
interleave writes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import noise as noise_mod
from .compress.estimators import WandaPruner, compressor_from_spec
from .errors import (
    ConfigurationError,
    InvariantError,
    LclabError,
)
from .experiment import ExperimentConfig, resolve_samples, run_experiment
from .harness import (
    CSV_HEADER as SWEEP_HEADER,
    ols_fit,
    records_from_csv,
    records_to_csv,
)
from .model import (
    ModelConfig,
    gen_toy_model,
    load_checkpoint,
    save_checkpoint,
)
from .svg import line_chart

LOCKFILE = ".lclab.lock"


class OutputDirLock:
    def __init__(self, out_dir: Path):
        self.path = out_dir / LOCKFILE
        self.fd = None

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise OSError(
                f"output directory is locked by another run ({self.path})"
            ) from None
        return self

    def __exit__(self, *exc):
        if self.fd is not None:
            os.close(self.fd)
            self.path.unlink(missing_ok=True)
        return False


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("LCLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"bad LCLAB_THREADS value {env!r}") from None
    return 1


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def cmd_gen_model(args) -> int:
    if args.config:
        config = ModelConfig.from_dict(_load_json(args.config))
    else:
        config = ModelConfig.desk_default()
    ckpt = gen_toy_model(
        config,
        args.seed,
        outlier_fraction=args.outlier_fraction,
        outlier_scale=args.outlier_scale,
    )
    save_checkpoint(ckpt, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_compress(args) -> int:
    spec_text = args.spec
    if os.path.exists(spec_text):
        spec = _load_json(spec_text)
    else:
        try:
            spec = json.loads(spec_text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"--spec is neither a file nor JSON: {exc}") from None
    spec = dict(spec)
    spec.pop("label", None)
    ckpt = load_checkpoint(args.ckpt)
    compressor = compressor_from_spec(spec)
    if isinstance(compressor, WandaPruner):
        # Calibration reuses the synthetic sample machinery of the sweep.
        cfg = ExperimentConfig(
            seed=args.seed,
            model={"load": args.ckpt},
            methods=[{"label": "x", "type": "identity"}],
            lengths=[min(512, ckpt.config.max_context)],
            samples={"synthetic": {"seed": args.seed}},
            n_samples=1,
        )
        _, calib = resolve_samples(cfg, ckpt.config)
        compressor.fit(ckpt, calib=calib)
    else:
        compressor.fit(ckpt)
    save_checkpoint(compressor.transform(ckpt), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_json_file(args.config)
    out_dir = Path(args.out or cfg.out_dir or ".")
    with OutputDirLock(out_dir):
        records = run_experiment(cfg, threads=_threads(args))
        csv_text = records_to_csv(records)
        _write_text(out_dir / "sweep.csv", csv_text)
        by_label: dict[str, list] = defaultdict(list)
        for r in records:
            by_label[r.method_label].append(r)
        series = [
            (
                label,
                [r.context_length for r in rs],
                [r.kl_mean for r in rs],
                [r.kl_std for r in rs],
            )
            for label, rs in by_label.items()
        ]
        _write_text(
            out_dir / "sweep.svg",
            line_chart(
                series,
                title="Output divergence vs context length",
                xlabel="context length (tokens)",
                ylabel="KL divergence (nats)",
            ),
        )
    print(f"wrote {out_dir / 'sweep.csv'} and {out_dir / 'sweep.svg'}")
    return 0


def cmd_simulate(args) -> int:
    raw = _load_json(args.config)
    interps = raw.pop("interpretations", list(noise_mod.INTERPRETATIONS))
    base_seed = args.seed if args.seed is not None else raw.pop("seed", 0)
    raw.pop("seed", None)
    raw.pop("interpretation", None)
    out_dir = Path(args.out or raw.pop("out_dir", "."))
    t_points = raw.pop("t_points", None)
    curves = []
    fits = []
    with OutputDirLock(out_dir):
        for interp in interps:
            try:
                cfg = noise_mod.NoiseSimConfig(
                    interpretation=interp,
                    seed=base_seed,
                    t_points=tuple(t_points) if t_points else None,
                    **raw,
                )
            except TypeError as exc:
                raise ConfigurationError(str(exc)) from None
            curve = noise_mod.simulate(cfg)
            curves.append(curve)
            slope, intercept, r2 = noise_mod.fit_linear(curve)
            fits.append((interp, slope, r2))
        _write_text(out_dir / "noise.csv", noise_mod.curves_to_csv(curves))
        series = [
            (c.interpretation, c.t, c.variance, c.ci_halfwidth) for c in curves
        ]
        _write_text(
            out_dir / "noise.svg",
            line_chart(
                series,
                title="Hidden-state error variance vs position",
                xlabel="position t",
                ylabel="error variance",
            ),
        )
    for interp, slope, r2 in fits:
        print(f"{interp}: slope={slope!r} r2={r2!r}")
    print(f"wrote {out_dir / 'noise.csv'} and {out_dir / 'noise.svg'}")
    return 0


EXPECTED_TRENDS = """\
Expected qualitative behavior (not asserted; depends on trained-weight
structure a random toy model only imitates):
  - low-bit weight quantization: positive KL slope vs context length
  - magnitude / calibrated pruning: near-flat KL vs context length
  - mixed precision (salient groups at 8 bit): flattened slope at a
    similar overall KL level
  - light random pruning: positive, roughly linear slope
"""


def cmd_report(args) -> int:
    rows = []  # (label, slope, intercept, r2)
    sweep_records = []
    for path in args.csv:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        header = text.split("\n", 1)[0]
        if header == SWEEP_HEADER:
            sweep_records.extend(records_from_csv(text))
        elif header == noise_mod.CSV_HEADER:
            for curve in noise_mod.curves_from_csv(text):
                slope, intercept, r2 = noise_mod.fit_linear(curve)
                rows.append((curve.interpretation, slope, intercept, r2))
        else:
            raise ConfigurationError(f"{path}: unrecognized CSV header {header!r}")
    by_label: dict[str, list] = defaultdict(list)
    for r in sweep_records:
        by_label[r.method_label].append(r)
    for label, rs in by_label.items():
        x = np.asarray([r.context_length for r in rs], dtype=np.float64)
        y = np.asarray([r.kl_mean for r in rs], dtype=np.float64)
        slope, intercept, r2 = ols_fit(x, y)
        rows.append((label, slope, intercept, r2))

    out_dir = Path(args.out or ".")
    with OutputDirLock(out_dir):
        csv_lines = ["method,slope,intercept,r2"]
        for label, slope, intercept, r2 in rows:
            csv_lines.append(f"{label},{slope!r},{intercept!r},{r2!r}")
        _write_text(out_dir / "slopes.csv", "\n".join(csv_lines) + "\n")

        width = max((len(r[0]) for r in rows), default=6)
        txt = ["slope of KL divergence (or error variance) per unit length", ""]
        txt.append(f"{'method'.ljust(width)}  {'slope':>14}  {'r2':>8}")
        for label, slope, _intercept, r2 in rows:
            txt.append(f"{label.ljust(width)}  {slope:14.6e}  {r2:8.4f}")
        txt += ["", EXPECTED_TRENDS]
        _write_text(out_dir / "slopes.txt", "\n".join(txt))
    print("\n".join(txt))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lclab",
        description="Long-context behavior of zero-shot model compression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-model", help="generate a deterministic toy checkpoint")
    p.add_argument("--config", help="JSON file with model hyperparameters")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--outlier-fraction", type=float, default=0.005)
    p.add_argument("--outlier-scale", type=float, default=20.0)
    p.set_defaults(func=cmd_gen_model)

    p = sub.add_parser("compress", help="apply one compression spec to a checkpoint")
    p.add_argument("--ckpt", required=True, help="input checkpoint")
    p.add_argument("--out", required=True, help="output checkpoint")
    p.add_argument("--spec", required=True, help="spec JSON (file path or inline)")
    p.add_argument("--seed", type=int, default=0, help="calibration sample seed")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("sweep", help="run the KL context-length sweep")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", help="output directory (default from config)")
    p.add_argument("--seed", type=int, default=None, help="unused; seed comes from config")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="run the attention-noise simulator")
    p.add_argument("--config", required=True, help="noise config JSON")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="merge CSVs into a slope table")
    p.add_argument("csv", nargs="+", help="sweep or simulator CSV files")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantError as exc:
        print(f"error: invariant: {exc}", file=sys.stderr)
        return 4
    except (ConfigurationError, LclabError, ValueError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
