"""Command-line driver.

Runs one of the three modes and writes, under --out:

* steps.csv    -- header ``step,iterations,residual,rel_max_error``, one row
                  per time step;
* summary.csv  -- header ``mode,ranks,K,alpha,beta,total_seconds,model_speedup``,
                  one row per point of the speedup-model curve over
                  P_T in {1, 2, 4, 8, 16, 32};
* speedup.png, steps.png (skipped with --no-figures).

Floats are written with 17 significant digits. Exit codes: 0 converged,
1 not converged, 2 usage error, 3 I/O failure.

``--table-check`` replays the published speedup/efficiency arithmetic from
the built-in reference timings instead of running a simulation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import figures
from .driver import RunConfig, SimulationResult, measure_k_serial, run_simulation
from .grid import StencilKind
from .heat import ForcingMode
from .perfmodel import REFERENCE_RUNS, efficiency_table, observed_speedup

__all__ = ["build_parser", "parse_args", "run_and_report", "table_check", "main"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="heatpfasst",
        description="Space-time parallel solver for the forced 3D heat equation.",
    )
    p.add_argument("--mode", choices=("sdc", "mlsdc", "pfasst"), default="sdc")
    p.add_argument("--nx", type=int, default=31, help="fine interior points per dimension (2^k - 1)")
    p.add_argument("--nx-coarse", type=int, default=None,
                   help="coarse interior points per dimension (default: (nx-1)/2)")
    p.add_argument("--nodes", type=int, default=5, help="fine collocation nodes")
    p.add_argument("--nodes-coarse", type=int, default=3, help="coarse collocation nodes")
    p.add_argument("--dt", type=float, default=0.1875)
    p.add_argument("--tend", type=float, default=6.0)
    p.add_argument("--nu", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-10, help="residual threshold")
    p.add_argument("--ranks", type=int, default=1, help="time ranks P_T (pfasst mode)")
    p.add_argument("--forcing", choices=("corrected", "paper"), default="corrected")
    p.add_argument("--stencil", choices=("compact4", "second2"), default="compact4",
                   help="fine-level Laplacian")
    p.add_argument("--stencil-coarse", choices=("compact4", "second2"), default="second2")
    p.add_argument("--backend", choices=("sequential", "concurrent"), default="sequential")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--seed", type=int, default=None, help="reserved; numerics use no randomness")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.add_argument("--table-check", action="store_true",
                   help="replay the published table arithmetic and exit")
    return p


def parse_args(argv) -> tuple[RunConfig | None, argparse.Namespace]:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.table_check:
        return None, ns

    cfg = RunConfig(
        mode=ns.mode,
        n_fine=ns.nx,
        n_coarse=ns.nx_coarse if ns.nx_coarse is not None else (ns.nx - 1) // 2,
        nodes_fine=ns.nodes,
        nodes_coarse=ns.nodes_coarse,
        dt=ns.dt,
        t_end=ns.tend,
        nu=ns.nu,
        tol=ns.tol,
        ranks=ns.ranks,
        forcing=ForcingMode.CORRECTED if ns.forcing == "corrected" else ForcingMode.LITERAL,
        kind_fine=StencilKind(ns.stencil),
        kind_coarse=StencilKind(ns.stencil_coarse),
        backend=ns.backend,
        out=ns.out,
        max_iter=ns.max_iter,
        seed=ns.seed,
        figures=not ns.no_figures,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        parser.error(str(exc))  # exits with code 2
    return cfg, ns


def _write_steps_csv(path: Path, result: SimulationResult) -> None:
    lines = ["step,iterations,residual,rel_max_error"]
    for r in result.steps:
        lines.append(f"{r.step},{r.iterations},{_fmt(r.residual)},{_fmt(r.rel_max_error)}")
    path.write_text("\n".join(lines) + "\n")


def _write_summary_csv(path: Path, result: SimulationResult, k_serial: float) -> None:
    lines = ["mode,ranks,K,alpha,beta,total_seconds,model_speedup"]
    for p, s in result.model_curve(k_serial):
        lines.append(
            f"{result.mode},{p},{result.k},{_fmt(result.alpha)},{_fmt(result.beta)},"
            f"{_fmt(result.total_seconds)},{_fmt(s)}"
        )
    path.write_text("\n".join(lines) + "\n")


def run_and_report(cfg: RunConfig) -> int:
    result = run_simulation(cfg)
    # The model curve needs the serial sweep count; measure it from one serial
    # step unless this run is itself serial SDC.
    k_serial = result.k if cfg.mode == "sdc" else measure_k_serial(cfg)
    result.k_serial = k_serial

    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
        _write_steps_csv(cfg.out / "steps.csv", result)
        _write_summary_csv(cfg.out / "summary.csv", result, k_serial)
        if cfg.figures:
            figures.save_speedup_figure(
                cfg.out / "speedup.png", result.model_curve(k_serial), cfg.ranks, cfg.mode)
            figures.save_steps_figure(cfg.out / "steps.png", result.steps)
    except OSError as exc:
        print(f"heatpfasst: failed to write output: {exc}", file=sys.stderr)
        return 3

    print(f"mode={result.mode} ranks={result.ranks} steps={len(result.steps)} "
          f"K={result.k} K_serial={k_serial} alpha={result.alpha:.4g} beta={result.beta:.4g} "
          f"total={result.total_seconds:.3f}s error_at_tend={result.error_at_end:.6e} "
          f"converged={result.converged}")
    print(f"wrote {cfg.out / 'steps.csv'} and {cfg.out / 'summary.csv'}")
    return 0 if result.converged else 1


def table_check(out: Path | None, render: bool) -> int:
    for name, run in REFERENCE_RUNS.items():
        computed = observed_speedup(run.serial_step_seconds, run.steps, run.parallel_seconds)
        print(f"{run.label} [{name}]")
        print(f"  observed speedup at {run.steps} simultaneous steps: {computed:.2f} "
              f"({run.serial_step_seconds} s/step x {run.steps} / {run.parallel_seconds} s)")
        print("  ranks  speedup  efficiency")
        for ranks, speedup, eff in efficiency_table(run.speedups, run.ranks):
            eff_txt = "   --" if ranks == 1 else f"{eff:5.1f}%"
            print(f"  {ranks:5d}  {speedup:7.2f}  {eff_txt}")
        print()
    if out is not None and render:
        try:
            out.mkdir(parents=True, exist_ok=True)
            figures.save_table_figure(out / "table_check.png", REFERENCE_RUNS)
            print(f"wrote {out / 'table_check.png'}")
        except OSError as exc:
            print(f"heatpfasst: failed to write output: {exc}", file=sys.stderr)
            return 3
    return 0


def main(argv=None) -> int:
    cfg, ns = parse_args(argv if argv is not None else sys.argv[1:])
    if ns.table_check:
        return table_check(ns.out, not ns.no_figures)
    return run_and_report(cfg)


if __name__ == "__main__":
    sys.exit(main())
