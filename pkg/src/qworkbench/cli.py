"""Batch command line: run experiments from flat key = value configs and export CSV plus JSON.

Usage::

    python -m qworkbench sample --n 4 --circuit random --shots 100 --seed 3
    python -m qworkbench reproduce fig4.4 --n 6..12:2 --instances 100 --seed 1
    python -m qworkbench run --config my.cfg --seed 7
    python -m qworkbench verify-hash results/sample.csv

Exit codes: 0 success, 2 config error, 3 cap exceeded, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import experiments as ex
from .errors import CapExceededError, ConfigError, NumericalError
from .rng import make_rng
from .sign_easing import OptimizerConfig

log = logging.getLogger("qworkbench")

OUTPUT_DIR_ENV = "QWORKBENCH_OUTPUT_DIR"
FIGURES = ("fig4.4", "fig4.5", "fig10.1", "fig11.2a", "fig11.4", "table7.5")

# value kinds: int, float, str, bool, ints (range list), floats (comma list)
SCHEMAS: dict[str, dict[str, tuple[str, object]]] = {
    "sample": {"circuit": ("str", "random"), "n": ("int", 4), "depth": ("int", 4), "shots": ("int", 100)},
    "analyze": {"circuit": ("str", "cluster"), "n": ("int", 8), "depth": ("int", 0), "instances": ("int", 20)},
    "verify": {"n": ("int", 6), "depth": ("int", 8), "shots": ("int", 2000), "eps": ("float", 0.2),
               "source": ("str", "ideal")},
    "certify": {"rows": ("int", 2), "cols": ("int", 2), "p": ("float", 0.02), "method": ("str", "rapid"),
                "eps": ("float", 0.05), "delta": ("float", 0.05), "alpha": ("float", 0.05), "runs": ("int", 10)},
    "qmc": {"model": ("str", "random"), "n": ("int", 4), "beta": ("float", 1.0), "m": ("int", 20),
            "mode": ("str", "exact"), "steps": ("int", 20000), "a": ("float", 0.5), "b": ("float", 1.0)},
    "ease": {"model": ("str", "ladder"), "d": ("int", 2), "instances": ("int", 1),
             "jpar": ("floats", [1.0]), "jperp": ("floats", [0.8]), "jx": ("floats", [1.0]),
             "j0": ("floats", [1.0]), "j1": ("floats", [1.0]), "j2": ("floats", [1.0]), "j3": ("floats", [1.0]),
             "half_spin": ("bool", True), "sites": ("int", 0), "beta": ("float", 1.0), "m": ("int", 100),
             "alpha": ("float", 40.0), "init": ("str", "perturbed-identity"), "restarts": ("int", 2),
             "max_iters": ("int", 300), "workers": ("int", 1)},
    "gadget": {"vertices": ("int", 3), "edges": ("str", "0-1,1-2,0-2"), "mode": ("str", "clifford"),
               "clifford": ("bool", False)},
    "fig4.4": {"n": ("ints", [6, 8, 10, 12]), "instances": ("int", 100), "depth": ("str", "linear")},
    "fig4.5": {"n": ("ints", [8, 10, 12]), "instances": ("int", 100), "depth": ("str", "linear")},
    "fig10.1": {"instances": ("int", 100), "alpha": ("floats", [40.0 * k for k in range(11)]), "n": ("int", 5),
                "beta": ("float", 1.0), "m": ("int", 100), "workers": ("int", 1)},
    "fig11.2a": {"instances": ("int", 100), "d": ("ints", [2, 3, 4]), "restarts": ("int", 4), "workers": ("int", 1)},
    "fig11.4": {"jperp": ("floats", [0.4, 0.8, 1.2, 1.6]), "jx": ("floats", [0.0, 0.25, 0.5, 1.0, 1.5]),
                "restarts": ("int", 6), "workers": ("int", 1)},
    "table7.5": {"eps_fraction": ("float", 0.2), "delta": ("float", 0.01)},
}
COMMON = {"seed": ("int", 1)}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 1
    params: dict = field(default_factory=dict)
    output: str | None = None

    def canonical(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "params": self.params, "version": __version__}

    def digest(self) -> str:
        return config_hash(self.canonical())


def config_hash(canonical: dict) -> str:
    blob = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------- parsing


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _parse_ints(s: str) -> list[int]:
    """Comma list whose items may be ranges a..b or a..b:step (inclusive)."""
    out = []
    for part in s.split(","):
        part = part.strip()
        if ".." in part:
            rng_part, _, step = part.partition(":")
            a, b = rng_part.split("..")
            out += list(range(int(a), int(b) + 1, int(step) if step else 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ConfigError("empty integer list")
    return out


def parse_value(kind: str, raw) -> object:
    if not isinstance(raw, str):
        return raw
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            return _parse_bool(raw)
        if kind == "ints":
            return _parse_ints(raw)
        if kind == "floats":
            return [float(x) for x in raw.split(",") if x.strip()]
        return raw.strip()
    except ValueError as e:
        raise ConfigError(f"cannot parse {raw!r} as {kind}: {e}") from None


def read_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _overrides(tokens: list[str]) -> dict[str, str]:
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        elif i + 1 < len(tokens) and not tokens[i + 1].startswith("--"):
            val = tokens[i + 1]
            i += 2
        else:
            val = "true"
            i += 1
        out[key.replace("-", "_")] = val
    return out


def build_config(kind: str, file_values: dict[str, str], overrides: dict[str, str],
                 output: str | None = None) -> ExperimentConfig:
    if kind not in SCHEMAS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    declared = file_values.pop("kind", kind)
    if declared != kind:
        raise ConfigError(f"config declares kind {declared!r} but {kind!r} was requested")
    schema = {**COMMON, **SCHEMAS[kind]}
    merged = {**file_values, **overrides}
    unknown = sorted(set(merged) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {kind}: {', '.join(unknown)}")
    values = {k: parse_value(t, merged[k]) if k in merged else d for k, (t, d) in schema.items()}
    seed = int(values.pop("seed"))
    return ExperimentConfig(kind, seed, values, output)


# ---------------------------------------------------------------- dispatch


def _edges(s: str) -> list[tuple[int, int]]:
    out = []
    for part in s.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            a, b = part.split("-")
            out.append((int(a), int(b)))
        except ValueError:
            raise ConfigError(f"bad edge {part!r}; use i-j") from None
    return out


def _ease_grid(p: dict) -> list[dict]:
    model = p["model"]
    if model == "hidden":
        return [{"d": p["d"], "instance": i} for i in range(p["instances"])]
    extra = {"half_spin": p["half_spin"], "sites": p["sites"], "beta": p["beta"], "m": p["m"]}
    if model == "ladder":
        return [{"jpar": a, "jperp": b, "jx": c, **extra}
                for a in p["jpar"] for b in p["jperp"] for c in p["jx"]]
    if model == "jmodel":
        return [{"j0": a, "j1": b, "j2": c, "j3": e, **extra}
                for a in p["j0"] for b in p["j1"] for c in p["j2"] for e in p["j3"]]
    raise ConfigError(f"unknown easing model {model!r}")


def execute(cfg: ExperimentConfig) -> ex.ResultTable:
    p = cfg.params
    rng = make_rng(cfg.seed)
    k = cfg.kind
    if k == "sample":
        return ex.sample(p["circuit"], p["n"], p["depth"], p["shots"], rng)
    if k == "analyze":
        return ex.analyze(p["circuit"], p["n"], p["depth"], p["instances"], rng)
    if k == "verify":
        return ex.verify(p["n"], p["depth"], p["shots"], p["eps"], p["source"], rng)
    if k == "certify":
        return ex.certify(p["rows"], p["cols"], p["p"], p["method"], p["eps"], p["delta"], p["alpha"],
                          p["runs"], rng)
    if k == "qmc":
        return ex.qmc_run(p["model"], p["n"], p["beta"], p["m"], p["mode"], p["steps"], p["a"], p["b"], rng)
    if k == "ease":
        oc = OptimizerConfig(alpha=p["alpha"], init=p["init"], restarts=p["restarts"], max_iters=p["max_iters"])
        return ex.ease_grid(p["model"], _ease_grid(p), oc, rng, p["workers"])
    if k == "gadget":
        return ex.gadget(p["vertices"], _edges(p["edges"]), p["mode"], p["clifford"])
    if k == "fig4.4":
        return ex.fig_4_4(rng, p["n"], p["instances"], p["depth"])
    if k == "fig4.5":
        return ex.fig_4_5(rng, p["n"], p["instances"], p["depth"])
    if k == "fig10.1":
        return ex.fig_10_1(rng, p["instances"], p["alpha"], p["n"], p["beta"], p["m"], p["workers"])
    if k == "fig11.2a":
        return ex.fig_11_2a(rng, p["instances"], tuple(p["d"]), p["restarts"], p["workers"])
    if k == "fig11.4":
        return ex.fig_11_4(rng, p["jperp"], p["jx"], p["restarts"], p["workers"])
    if k == "table7.5":
        return ex.table_7_5(p["eps_fraction"], p["delta"])
    raise ConfigError(f"unknown experiment kind {k!r}")


# ---------------------------------------------------------------- output


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):
        return _cell(v.item())
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def render_csv(cfg: ExperimentConfig, table: ex.ResultTable) -> str:
    buf = io.StringIO()
    buf.write(f"# kind: {cfg.kind}\n# seed: {cfg.seed}\n# config_hash: {cfg.digest()}\n")
    buf.write("# config: " + json.dumps(cfg.canonical(), sort_keys=True, separators=(",", ":")) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_summary(cfg: ExperimentConfig, table: ex.ResultTable, wall_time: float | None) -> str:
    doc = {"kind": cfg.kind, "seed": cfg.seed, "config_hash": cfg.digest(), "config": cfg.canonical(),
           "columns": table.columns, "n_rows": len(table.rows), "summary": _jsonable(table.summary)}
    if wall_time is not None:
        doc["wall_time_s"] = wall_time
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def output_paths(cfg: ExperimentConfig) -> tuple[Path, Path]:
    if cfg.output:
        csv_path = Path(cfg.output)
    else:
        base = Path(os.environ.get(OUTPUT_DIR_ENV, "results"))
        csv_path = base / f"{cfg.kind}.csv"
    return csv_path, csv_path.with_suffix(".json")


def run(cfg: ExperimentConfig, record_time: bool = False) -> tuple[Path, Path, ex.ResultTable]:
    """Execute the experiment and write the CSV table and its JSON summary."""
    t0 = time.perf_counter()
    table = execute(cfg)
    wall = time.perf_counter() - t0
    log.info("%s finished in %.2f s", cfg.kind, wall)
    csv_path, json_path = output_paths(cfg)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(render_csv(cfg, table))
    json_path.write_text(render_summary(cfg, table, wall if record_time else None))
    return csv_path, json_path, table


def verify_hash(path: str | Path) -> bool:
    """Recompute the config hash embedded in a CSV (or JSON summary) and compare."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        doc = json.loads(text)
        return config_hash(doc["config"]) == doc["config_hash"]
    meta = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        k, _, v = line[1:].partition(":")
        meta[k.strip()] = v.strip()
    if "config" not in meta or "config_hash" not in meta:
        raise ConfigError(f"{path} has no config metadata")
    return config_hash(json.loads(meta["config"])) == meta["config_hash"]


# ---------------------------------------------------------------- entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qworkbench", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", help="CSV output path (default: $%s/<kind>.csv)" % OUTPUT_DIR_ENV)
        p.add_argument("--record-time", action="store_true", help="store wall time in the JSON summary")
        p.add_argument("-v", "--verbose", action="store_true")

    for name in ("sample", "analyze", "verify", "certify", "qmc", "ease", "gadget"):
        common(sub.add_parser(name, help=f"run the {name} experiment"))
    rp = sub.add_parser("reproduce", help="regenerate a figure or table dataset")
    rp.add_argument("figure", choices=FIGURES)
    common(rp)
    common(sub.add_parser("run", help="run the experiment named by the config's kind"))
    vh = sub.add_parser("verify-hash", help="check the config hash embedded in an output file")
    vh.add_argument("path")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = _parser()
    args, rest = ap.parse_known_args(argv)
    try:
        if args.command == "verify-hash":
            ok = verify_hash(args.path)
            print("hash ok" if ok else "hash mismatch")
            return 0 if ok else 2
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        file_values = read_config_text(Path(args.config).read_text()) if args.config else {}
        if args.command == "reproduce":
            kind = args.figure
        elif args.command == "run":
            if "kind" not in file_values:
                raise ConfigError("run needs a config with a kind")
            kind = file_values["kind"]
        else:
            kind = args.command
        cfg = build_config(kind, file_values, _overrides(rest), args.out)
        csv_path, json_path, _ = run(cfg, args.record_time)
        print(f"wrote {csv_path} and {json_path}")
        return 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except CapExceededError as e:
        print(f"cap exceeded: {e}", file=sys.stderr)
        return 3
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 4
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
