"""Command-line front end: ``ctrlop {control,experiment,tomo,fringe,resources}``.

Every command builds all of its output in memory first and then writes each
file via a temporary file and rename, so a failing run leaves nothing behind.
Output is a pure function of the arguments (no timestamps, sorted JSON keys).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import gates, resources, tomography
from .operators import DimensionMismatch, Operator
from .photonic.noise import CALIBRATED, NoiseModel
from .qudit import add_control, restrict_to_qubits

SCHEMA = 1
EXIT_ERROR = 2


class CLIError(Exception):
    def __init__(self, kind: str, detail: str = ""):
        self.kind, self.detail = kind, detail
        super().__init__(f"{kind}: {detail}" if detail else kind)


@dataclass(frozen=True)
class RunConfig:
    command: str
    mode: str
    seed: int | None
    noise: NoiseModel
    out: Path
    fmt: str

    def record(self) -> dict:
        # the output directory is left out so moving a run does not change its files
        d = {"command": self.command, "mode": self.mode, "seed": self.seed, "format": self.fmt}
        if self.mode == "sampled":
            d["noise"] = asdict(self.noise)
        return d


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dump_json(payload: dict) -> str:
    return json.dumps({"schema": SCHEMA, **payload}, sort_keys=True, indent=2, default=_default) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_outputs(out: Path, files: dict[str, str]) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, out / name)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        written.append(out / name)
    return written


def _noise(args) -> NoiseModel:
    base = CALIBRATED if args.calibrated else NoiseModel()

    def pick(value, fallback):
        return fallback if value is None else value

    return NoiseModel(pick(args.noise_phase_sigma, base.phase_jitter_sigma),
                      pick(args.noise_distinguishability, base.distinguishability),
                      pick(args.noise_waveplate_sigma, base.waveplate_angle_error_sigma),
                      pick(args.shots, base.poisson_counts))


def _config(args) -> RunConfig:
    mode = getattr(args, "mode", "exact")
    if mode == "sampled" and args.seed is None:
        raise CLIError("invalid input", "sampled mode needs --seed")
    return RunConfig(args.command, mode, args.seed, _noise(args), Path(args.out), args.format)


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CLIError("invalid input", f"no such file {path}") from None
    except json.JSONDecodeError as exc:
        raise CLIError("invalid input", f"{path} is not JSON: {exc}") from None


def cmd_control(args, cfg: RunConfig) -> dict[str, str]:
    op = Operator.from_dict(_read_json(args.operator))
    ctrl = add_control(op, fire_on=args.fire_on)
    payload = {"run": cfg.record(), "fire_on": args.fire_on, "operator": ctrl.to_dict(),
               "qubit_block": restrict_to_qubits(ctrl).to_dict()}
    if cfg.fmt == "csv":
        m = restrict_to_qubits(ctrl).matrix
        rows = [(i, j, m[i, j].real, m[i, j].imag) for i in range(m.shape[0]) for j in range(m.shape[1])]
        return {"controlled.csv": dump_csv(["row", "col", "re", "im"], rows)}
    return {"controlled.json": dump_json(payload)}


def cmd_experiment(args, cfg: RunConfig) -> dict[str, str]:
    res = gates.run_experiment(args.name, cfg.mode, cfg.noise if cfg.mode == "sampled" else None, cfg.seed)
    if cfg.fmt == "json":
        return {f"{args.name}.json": dump_json({"run": cfg.record(), **res.to_dict()})}
    files = {}
    for k, (m, i) in enumerate(zip(res.measured, res.ideal), start=1):
        rows = []
        for a, lab_in in enumerate(m.in_labels):
            for b, lab_out in enumerate(m.out_labels):
                raw = m.raw[a, b]
                rows.append((lab_in, lab_out, float(raw) if m.counts is None else int(m.counts[a, b]),
                             m.probabilities[a, b], i.probabilities[a, b]))
        files[f"{args.name}_table{k}.csv"] = dump_csv(
            ["in", "out", "raw" if m.counts is None else "count", "probability", "ideal"], rows)
    summary = [(f"F{k}", f) for k, f in enumerate(res.fidelities, start=1)]
    if res.report is not None:
        summary += [(key, val) for key, val in res.report.to_dict().items() if key != "d"]
    files[f"{args.name}_fidelity.csv"] = dump_csv(["quantity", "value"], summary)
    return files


def cmd_tomo(args, cfg: RunConfig) -> dict[str, str]:
    exp = gates.EXPERIMENTS.get(args.name)
    if exp is None or not exp.hofmann:
        raise CLIError("invalid input", f"tomography needs a controlled gate, got {args.name!r}")
    target = exp.targets[0]
    shots = args.shots if args.shots is not None else 2000.0
    if cfg.mode == "exact":
        data = tomography.generate_dataset(exp.settings, None, shots, expected=True)
    else:
        data = tomography.generate_dataset(exp.settings, cfg.noise, shots, cfg.seed)
    ideal = tomography.ChiMatrix.from_unitary(target)
    chi = tomography.mle_reconstruct(data)
    fid = tomography.process_fidelity(chi, ideal)
    result = {"run": cfg.record(), "gate": args.name, "shots_per_setting": shots,
              "process_fidelity": fid, "chi": chi.to_dict(),
              "chi_min_eigenvalue": chi.min_eigenvalue}
    if args.resamples:
        mean, std = tomography.error_bars(data, ideal, args.resamples,
                                          cfg.seed if cfg.seed is not None else 0)
        result["resampled_fidelity"] = {"mean": mean, "std": std, "n": args.resamples}
    files = {f"{args.name}_dataset.csv": data.to_csv()}
    if cfg.fmt == "json":
        files[f"{args.name}_chi.json"] = dump_json(result)
    else:
        m = chi.matrix
        labels = tomography.PAULI_LABELS
        files[f"{args.name}_chi.csv"] = dump_csv(
            ["m", "n", "re", "im"], [(labels[i], labels[j], m[i, j].real, m[i, j].imag)
                                     for i in range(16) for j in range(16)])
        summary = [("process_fidelity", fid)]
        if "resampled_fidelity" in result:
            summary += [("resampled_mean", mean), ("resampled_std", std)]
        files[f"{args.name}_fidelity.csv"] = dump_csv(["quantity", "value"], summary)
    return files


def cmd_fringe(args, cfg: RunConfig) -> dict[str, str]:
    if args.points < 2:
        raise CLIError("invalid input", "--points must be at least 2")
    grid = np.linspace(0.0, 2 * np.pi, args.points)
    rows = gates.fringe_scan(grid, cfg.mode, cfg.noise if cfg.mode == "sampled" else None, cfg.seed)
    header = ["theta", "plus_plus", "plus_minus"]
    if cfg.fmt == "csv":
        return {"fringe.csv": dump_csv(header, rows.tolist())}
    return {"fringe.json": dump_json({"run": cfg.record(), "columns": header, "rows": rows})}


def _parse_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise CLIError("invalid input", f"bad n range {text!r}") from None


def cmd_resources(args, cfg: RunConfig) -> dict[str, str]:
    ns = _parse_range(args.n)
    if args.model == "shor":
        rows = resources.compare_report(ns, "shor", args.p_fraction)
    else:
        if args.p is None or args.q is None:
            raise CLIError("invalid input", "explicit model needs --p and --q")
        rows = resources.compare_report(ns, (args.p, args.q))
    if cfg.fmt == "csv":
        return {"resources.csv": resources.report_csv(rows)}
    return {"resources.json": dump_json({"run": cfg.record(), "model": args.model,
                                         "rows": [r.to_dict() for r in rows]})}


COMMANDS = {"control": cmd_control, "experiment": cmd_experiment, "tomo": cmd_tomo,
            "fringe": cmd_fringe, "resources": cmd_resources}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int)
    noisy = argparse.ArgumentParser(add_help=False)
    noisy.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    noisy.add_argument("--noise-phase-sigma", type=float)
    noisy.add_argument("--noise-distinguishability", type=float)
    noisy.add_argument("--noise-waveplate-sigma", type=float)
    noisy.add_argument("--shots", type=float, help="expected counts per setting")
    noisy.add_argument("--calibrated", action="store_true",
                       help="start from the calibrated noise model; explicit flags override it")

    p = argparse.ArgumentParser(prog="ctrlop", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("control", parents=[common], help="add a control qubit to an operator")
    c.add_argument("operator", help="operator JSON file")
    c.add_argument("--fire-on", type=int, choices=(0, 1), default=1)
    e = sub.add_parser("experiment", parents=[common, noisy], help="truth tables and fidelity bounds")
    e.add_argument("name", choices=sorted(gates.EXPERIMENTS))
    t = sub.add_parser("tomo", parents=[common, noisy], help="process tomography")
    t.add_argument("name", nargs="?", default="cnot")
    t.add_argument("--resamples", type=int, default=0)
    f = sub.add_parser("fringe", parents=[common, noisy], help="Sagnac phase scan")
    f.add_argument("--points", type=int, default=100)
    r = sub.add_parser("resources", parents=[common], help="CNOT overhead comparison")
    r.add_argument("--model", choices=("shor", "explicit"), default="shor")
    r.add_argument("--n", default="1..10", help="e.g. 2..10 or 1,5,10")
    r.add_argument("--p", type=int)
    r.add_argument("--q", type=int)
    r.add_argument("--p-fraction", type=float, default=0.5)
    for sp in (c, r):
        sp.set_defaults(mode="exact", noise_phase_sigma=None, noise_distinguishability=None,
                        noise_waveplate_sigma=None, shots=None, calibrated=False)
    return p


def _fail(kind: str, detail: str) -> int:
    sys.stderr.write(json.dumps({"schema": SCHEMA, "error": kind, "detail": detail}, sort_keys=True) + "\n")
    return EXIT_ERROR


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        files = COMMANDS[args.command](args, cfg)
        for path in write_outputs(cfg.out, files):
            print(path)
    except CLIError as exc:
        return _fail(exc.kind, exc.detail)
    except DimensionMismatch as exc:
        return _fail("dimension mismatch", str(exc))
    except (ValueError, KeyError, RuntimeError) as exc:
        return _fail("invalid input", str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
