"""Batch driver: model definition -> diagrams -> hierarchy -> sweep -> files.

Configuration is a single JSON file; every field except the model has a
default, and a handful of flags override config values.  Exit codes:
0 success, 1 I/O failure, 2 usage error, 3 model/degeneracy error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ansatz import build_qca
from .diagrams import build_diagram, enumerate_leading, export_dot, leading_to_json
from .hierarchy import (
    MODES,
    ORDERINGS,
    ThetaEstimator,
    build_priority_list,
    hierarchy_to_json,
)
from .pauli import PauliString
from .perturbation import (
    Coupling,
    DegeneracyError,
    HamiltonianModel,
    series_residual,
    tfim_chain,
)
from .simulator import fidelity, prepare
from .vqe import hierarchy_sweep, sweep_thetas_json, sweep_to_csv

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_MODEL = 3

DEFAULT_HIERARCHIES = [
    ["pert", "hierarchy"],
    ["pert", "parent"],
    ["rev", "hierarchy"],
    ["2loc", "hierarchy"],
    ["2loc", "parent"],
    ["loc", "hierarchy"],
]


@dataclass
class RunConfig:
    model: HamiltonianModel
    k_max: int = 4
    mode: str = "pert"
    ordering: str = "hierarchy"
    tie_seed: int | None = None
    n_p_max: int = 30
    gtol: float = 1e-9
    max_iterations: int = 2000
    j_values: list = field(default_factory=lambda: [0.15, 6.0, 1.0])
    hierarchies: list = field(default_factory=lambda: DEFAULT_HIERARCHIES)
    out: str = "."

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if "model" not in raw:
            raise ConfigError("config requires a 'model' section")
        model = _parse_model(raw["model"])
        hier = raw.get("hierarchy", {})
        sweep = raw.get("sweep", {})
        cfg = cls(
            model=model,
            k_max=int(raw.get("k_max", 4)),
            mode=hier.get("mode", "pert"),
            ordering=hier.get("ordering", "hierarchy"),
            tie_seed=hier.get("tie_seed"),
            n_p_max=int(sweep.get("n_p_max", 30)),
            gtol=float(sweep.get("gtol", 1e-9)),
            max_iterations=int(sweep.get("max_iterations", 2000)),
            j_values=list(sweep.get("j_values", [0.15, 6.0, 1.0])),
            hierarchies=list(sweep.get("hierarchies", DEFAULT_HIERARCHIES)),
            out=raw.get("out", "."),
        )
        if cfg.mode not in MODES:
            raise ConfigError(f"unknown hierarchy mode {cfg.mode!r}")
        if cfg.ordering not in ORDERINGS:
            raise ConfigError(f"unknown ordering {cfg.ordering!r}")
        return cfg


class ConfigError(ValueError):
    pass


def _parse_model(raw: dict) -> HamiltonianModel:
    kind = raw.get("type", "tfim")
    if kind == "tfim":
        return tfim_chain(
            int(raw["n_qubits"]), float(raw.get("h", 1.0)), float(raw.get("j", 0.0))
        )
    if kind == "custom":
        couplings = tuple(
            Coupling(float(c["j"]), PauliString.from_label(c["pauli"]))
            for c in raw["couplings"]
        )
        return HamiltonianModel(tuple(float(h) for h in raw["h"]), couplings)
    raise ConfigError(f"unknown model type {kind!r}")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# -- subcommands ------------------------------------------------------------------


def cmd_hierarchy(cfg: RunConfig) -> int:
    plist = build_priority_list(
        cfg.model, build_qca(cfg.model.n_qubits), cfg.k_max, cfg.mode,
        cfg.ordering, cfg.tie_seed,
    )
    rows = hierarchy_to_json(plist, cfg.model)
    _write(Path(cfg.out) / "hierarchy.json",
           json.dumps(rows, indent=2, sort_keys=True) + "\n")
    header = f"{'rank':>4}  {'generator':<{cfg.model.n_qubits + 6}}  {'s':<{cfg.model.n_qubits}}  a  {'theta_tilde':>14}  {'j_weight':>12}"
    print(header)
    for row in rows:
        print(
            f"{row['rank']:>4}  {row['pauli']:<{cfg.model.n_qubits + 6}}  "
            f"{row['s']:<{cfg.model.n_qubits}}  {row['a']}  "
            f"{row['theta_tilde']:>14.6e}  {row['j_weight']:>12.6e}"
        )
    return EXIT_OK


def cmd_diagrams(cfg: RunConfig) -> int:
    leading = enumerate_leading(cfg.model, cfg.k_max)
    out_dir = Path(cfg.out)
    listing = leading_to_json(cfg.model, leading)
    _write(out_dir / "leading.json", json.dumps(listing, indent=2, sort_keys=True) + "\n")
    count = 0
    for (state, parity), ks in leading.items():
        for k in ks:
            d = build_diagram(cfg.model, k)
            name = f"diagram_o{k.order}_k{'-'.join(str(c) for c in k)}.dot"
            _write(out_dir / name, export_dot(d))
            count += 1
    print(f"wrote {count} diagrams and leading.json to {out_dir}")
    return EXIT_OK


def _sweep_task(args):
    cfg_raw, mode, ordering, j_value = args
    cfg = RunConfig.from_dict(cfg_raw)
    plist = build_priority_list(
        cfg.model, build_qca(cfg.model.n_qubits), cfg.k_max, mode, ordering,
        cfg.tie_seed,
    )
    base = cfg.model.strengths[0] if cfg.model.couplings else 1.0
    target = cfg.model.rescaled(j_value / base) if base else cfg.model
    result = hierarchy_sweep(
        target, plist, cfg.n_p_max, cfg.gtol, cfg.max_iterations,
        rng=np.random.default_rng(cfg.tie_seed or 0),
    )
    tag = mode + ("_parent" if ordering == "parent" else "")
    stem = f"sweep_{tag}_j{j_value:g}"
    return stem, sweep_to_csv(result), sweep_thetas_json(result), result.reference_energy


def cmd_sweep(cfg: RunConfig, raw: dict, jobs: int = 1) -> int:
    tasks = [
        (raw, mode, ordering, j)
        for j in cfg.j_values
        for mode, ordering in cfg.hierarchies
    ]
    out_dir = Path(cfg.out)
    manifest = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    for stem, csv_text, theta_json, e_ref in results:
        _write(out_dir / f"{stem}.csv", csv_text)
        _write(out_dir / f"{stem}_theta.json", theta_json)
        manifest[stem] = {"reference_energy": e_ref}
    _write(out_dir / "manifest.json",
           json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(results)} sweeps to {out_dir}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    """Quick property suite: series-residual scaling, disconnected
    factorization, duplication extensivity, and spanning."""
    from .perturbation import CoefficientTable
    import math

    failures = 0

    def report(name: str, ok: bool, detail: str):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failures += 0 if ok else 1

    # residual scaling on a small chain
    model = tfim_chain(4, 1.0, 1.0)
    scales = [0.1, 0.05, 0.025]
    residuals = [series_residual(model, 4, s) for s in scales]
    slope = math.log(residuals[0] / residuals[-1]) / math.log(scales[0] / scales[-1])
    report("series residual slope", slope >= 9.0,
           f"slope {slope:.2f} over scales {scales} (tolerance >= 9.0)")

    # disconnected factorization on a two-block model
    left = PauliString.from_label("XXIIII")
    right = PauliString.from_label("IIIYZX")
    blocks = HamiltonianModel(
        (1.0, 1.3, 0.8, 1.1, 0.9, 1.2),
        (Coupling(0.3, left), Coupling(0.4, right)),
    )
    table = CoefficientTable(blocks, 4)
    worst = 0.0
    for ka in ((1, 0), (2, 0)):
        for kb in ((0, 1), (0, 2)):
            k = tuple(a + b for a, b in zip(ka, kb))
            worst = max(
                worst,
                abs(table.normalized(k) - table.normalized(ka) * table.normalized(kb)),
            )
    report("disconnected factorization", worst < 1e-10, f"max defect {worst:.2e}")

    # duplication extensivity
    single = tfim_chain(3, 1.0, 0.3)
    doubled_ops = tuple(
        Coupling(0.3, PauliString.from_ops(6, {q: "X", q + 1: "X"}))
        for q in (0, 1, 3, 4)
    )
    doubled = HamiltonianModel((1.0,) * 6, doubled_ops)
    est_single = ThetaEstimator(single, build_qca(3), 3)
    est_double = ThetaEstimator(doubled, build_qca(6), 3)
    singles = {k: v for k, v, _ in est_single._fixed}
    worst = 0.0
    for k, v in singles.items():
        lifted = tuple(k) + (0, 0)
        match = [vv for kk, vv, _ in est_double._fixed if tuple(kk) == lifted]
        worst = max(worst, abs(v - match[0]) if match else 1.0)
    report("duplication extensivity", worst < 1e-10, f"max copy defect {worst:.2e}")

    # spanning of the layered ansatz at two qubits
    rng = np.random.default_rng(7)
    qca = build_qca(2)
    worst_fid = 1.0
    for _ in range(5):
        target = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        target /= np.linalg.norm(target)
        best = 0.0
        for _ in range(4):
            theta = rng.uniform(0, 2 * np.pi, qca.num_params)
            res = _fidelity_maximize(qca, target, theta)
            best = max(best, res)
        worst_fid = min(worst_fid, best)
    report("layered-ansatz spanning", worst_fid >= 1 - 1e-6,
           f"worst target fidelity {worst_fid:.10f}")

    return EXIT_OK if failures == 0 else EXIT_MODEL


def _fidelity_maximize(ansatz, target, theta0) -> float:
    from scipy.optimize import minimize

    def objective(theta):
        psi = prepare(ansatz, theta)
        return 1.0 - fidelity(target, psi)

    res = minimize(objective, theta0, method="L-BFGS-B",
                   options={"maxiter": 3000, "ftol": 1e-16, "gtol": 1e-12})
    return 1.0 - float(res.fun)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pertvqe",
        description="perturbation-ordered product-ansatz construction and sweeps",
    )
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="tie-break seed (overrides config)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("hierarchy")
    sub.add_parser("diagrams")
    sub.add_parser("sweep")
    sub.add_parser("verify")
    args = parser.parse_args(argv)

    try:
        raw = json.loads(Path(args.config).read_text())
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"{args.config}:{exc.lineno}: {exc.msg}", file=sys.stderr)
        return EXIT_USAGE

    if args.out:
        raw["out"] = args.out
    if args.seed is not None:
        raw.setdefault("hierarchy", {})["tie_seed"] = args.seed

    try:
        cfg = RunConfig.from_dict(raw)
        if args.command == "hierarchy":
            return cmd_hierarchy(cfg)
        if args.command == "diagrams":
            return cmd_diagrams(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, raw, jobs=args.jobs)
        if args.command == "verify":
            return cmd_verify(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegeneracyError as exc:
        print(f"degenerate model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (ValueError,) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
