"""``lv``: classification, simulation and Monte Carlo from the command line.

Every command resolves its flags into a plain config dict (model
coefficients inlined) and hands it to a runner. Commands that write an
output file also write ``<out>.manifest.json``; ``lv replay`` feeds a
manifest's config back to the same runner, so outputs are reproduced
byte for byte.

Exit codes: 0 ok, 2 invalid input, 3 critical case, 4 non-finite state,
5 fewer than 90% of Monte Carlo paths completed.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path as FsPath

import click

from . import __version__
from .analysis import extinction_probabilities
from .errors import CriticalCase, LVError, NonFiniteState, ValidationError
from .model import ModelParams, NoiseMode, classify_deterministic, validate_params
from .pdmp import PdmpSpec, pdmp_boundary_lambdas, pdmp_exclusion_mc, simulate_pdmp
from .rng import B1, B3
from .sde import SimConfig, path_to_csv, simulate_boundary, simulate_full
from .stationary import DEFAULT_TOL, boundary_spec, classify_stochastic

EXIT_OK, EXIT_INPUT, EXIT_CRITICAL, EXIT_NUMERIC, EXIT_DEGRADED = 0, 2, 3, 4, 5
MIN_COMPLETED = 0.9


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise _Exit(EXIT_INPUT, f"cannot read {path}: {exc}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _parse_pair(text: str) -> list[float]:
    parts = text.replace(" ", "").split(",")
    if len(parts) != 2:
        raise click.BadParameter(f"expected two comma-separated numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise click.BadParameter(f"expected two comma-separated numbers, got {text!r}") from None


def _sim_config(cfg: dict) -> SimConfig:
    try:
        return SimConfig(T=cfg["T"], h=cfg["h"], seed=cfg["seed"], record_stride=cfg["stride"])
    except ValueError as exc:
        raise _Exit(EXIT_INPUT, str(exc)) from None


def _model(cfg: dict) -> ModelParams:
    return ModelParams.from_json(cfg["model"])


def _pdmp(cfg: dict) -> PdmpSpec:
    return PdmpSpec.from_json(cfg["model"])


# runners: config dict -> exit code; stdout text and files are their only effects


def _run_classify(cfg: dict) -> int:
    p = _model(cfg)
    validate_params(p, deterministic=True)
    out: dict = {"model": p.to_json()}
    code = EXIT_OK
    try:
        out["deterministic"] = classify_deterministic(p).to_json()
    except CriticalCase as exc:
        out["deterministic"] = {"critical": str(exc)}
        # with noise present the stochastic verdict decides the exit code
        if p.mode is NoiseMode.DETERMINISTIC:
            code = EXIT_CRITICAL
    if p.mode is NoiseMode.DETERMINISTIC:
        out["stochastic"] = None
    else:
        try:
            out["stochastic"] = classify_stochastic(p, cfg["tol"]).to_json()
        except CriticalCase as exc:
            rep = exc.report.to_json() if exc.report is not None else {}
            out["stochastic"] = {**rep, "critical": str(exc)}
            code = EXIT_CRITICAL
    if cfg.get("json", True):
        text = _dump(out)
    else:
        text = _classify_text(out)
    click.echo(text, nl=False)
    if cfg.get("out"):
        _write_text(cfg["out"], _dump(out))
    return code


def _classify_text(out: dict) -> str:
    lines = []
    det = out["deterministic"]
    if "critical" in det:
        lines.append(f"deterministic: critical ({det['critical']})")
    else:
        lines.append(f"deterministic: {det['case']}  lambda1={det['lambda1_det']:.6g}  lambda2={det['lambda2_det']:.6g}")
    sto = out["stochastic"]
    if sto is None:
        lines.append("stochastic: no noise")
    elif "critical" in sto:
        lines.append(f"stochastic: critical ({sto['critical']})")
    else:
        lam = ""
        if sto["lambda1"] is not None:
            lam = f"  lambda1={sto['lambda1']:.6g}  lambda2={sto['lambda2']:.6g}"
        lines.append(f"stochastic: {sto['regime']} [{sto['mode']}, {sto['case']}]{lam}")
    return "\n".join(lines) + "\n"


def _run_simulate(cfg: dict) -> int:
    sim = _sim_config(cfg)
    z0 = tuple(cfg["z0"])
    out = cfg["out"]
    try:
        if cfg.get("pdmp"):
            spec = _pdmp(cfg)
            path = simulate_pdmp(spec, cfg.get("i0", 1), z0, sim)
            with open(out, "w", encoding="utf-8", newline="\n") as fh:
                path.to_csv(fh)
            with open(_jumps_path(out), "w", encoding="utf-8", newline="\n") as fh:
                path.jumps_to_csv(fh)
        elif cfg.get("boundary"):
            species = int(cfg["boundary"])
            p = _model(cfg)
            validate_params(p, deterministic=True)
            spec = boundary_spec(p, species)
            path = simulate_boundary(spec, z0[species - 1], sim, stream=(0, B1 if species == 1 else B3))
            with open(out, "w", encoding="utf-8", newline="\n") as fh:
                path_to_csv(path, fh)
        else:
            path = simulate_full(_model(cfg), z0, sim)
            with open(out, "w", encoding="utf-8", newline="\n") as fh:
                path_to_csv(path, fh)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise _Exit(EXIT_INPUT, str(exc)) from None
    return EXIT_OK


def _jumps_path(out: str) -> str:
    p = FsPath(out)
    return str(p.with_name(p.stem + ".jumps.csv"))


def _run_montecarlo(cfg: dict) -> int:
    sim = _sim_config(cfg)
    z0 = tuple(cfg["z0"])
    try:
        if cfg.get("pdmp"):
            rep = pdmp_exclusion_mc(_pdmp(cfg), cfg.get("i0", 1), z0, cfg["n"], sim, cfg["floor"])
        else:
            rep = extinction_probabilities(_model(cfg), z0, cfg["n"], sim, cfg["floor"])
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise _Exit(EXIT_INPUT, str(exc)) from None
    text = _dump(rep.to_json())
    if cfg.get("out"):
        _write_text(cfg["out"], text)
    else:
        click.echo(text, nl=False)
    if rep.completed_fraction < MIN_COMPLETED:
        click.echo(f"only {rep.n_completed} of {rep.n_paths} paths completed", err=True)
        return EXIT_DEGRADED
    return EXIT_OK


def _run_pdmp_lambdas(cfg: dict) -> int:
    spec = _pdmp(cfg)
    try:
        res = pdmp_boundary_lambdas(spec, cfg["T"], cfg["seed"], h=cfg["h"], i0=cfg.get("i0", 1))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise _Exit(EXIT_INPUT, str(exc)) from None
    text = _dump(res.to_json())
    if cfg.get("out"):
        _write_text(cfg["out"], text)
    else:
        click.echo(text, nl=False)
    return EXIT_OK


RUNNERS = {
    "classify": _run_classify,
    "simulate": _run_simulate,
    "montecarlo": _run_montecarlo,
    "pdmp-lambdas": _run_pdmp_lambdas,
}


def _execute(command: str, cfg: dict) -> None:
    """Run ``command`` with error-to-exit-code mapping and manifest writing."""
    t0 = time.perf_counter()
    try:
        code = RUNNERS[command](cfg)
    except _Exit as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.code)
    except ValidationError as exc:
        where = f"{exc.field}: " if exc.field else ""
        click.echo(f"error: invalid input: {where}{exc}", err=True)
        sys.exit(EXIT_INPUT)
    except CriticalCase as exc:
        click.echo(f"critical case: {exc}", err=True)
        sys.exit(EXIT_CRITICAL)
    except NonFiniteState as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    except LVError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    if cfg.get("out"):
        outputs = [cfg["out"]]
        if command == "simulate" and cfg.get("pdmp"):
            outputs.append(_jumps_path(cfg["out"]))
        manifest = {
            "command": command,
            "config": cfg,
            "seed": cfg.get("seed"),
            "version": __version__,
            "duration_s": time.perf_counter() - t0,
            "outputs": outputs,
        }
        _write_text(cfg["out"] + ".manifest.json", _dump(manifest))
    sys.exit(code)


def _base_config(model_file: str) -> dict:
    return {"model_file": model_file, "model": _read_json_or_exit(model_file)}


def _read_json_or_exit(path: str) -> dict:
    try:
        return _read_json(path)
    except _Exit as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.code)


@click.group()
@click.version_option(__version__, prog_name="lv")
def main():
    """Thresholds, regimes and simulations of stochastic competitive Lotka-Volterra systems."""


@main.command()
@click.argument("model_file", type=click.Path(dir_okay=False))
@click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True, help="Quadrature tolerance and zero band for thresholds.")
@click.option("--json/--text", "as_json", default=True, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Also write the JSON report here.")
def classify(model_file, tol, as_json, out):
    """Deterministic and stochastic regime of MODEL_FILE."""
    cfg = _base_config(model_file)
    cfg.update(tol=tol, json=as_json, out=out)
    _execute("classify", cfg)


_z0 = click.option("--z0", default="2,2", show_default=True, help="Initial densities 'x,y'.")
_T = click.option("--T", "T", type=float, default=100.0, show_default=True, help="Horizon.")
_h = click.option("--h", "h", type=float, default=1e-3, show_default=True, help="Step size.")
_seed = click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=0, show_default=True)
_pdmp_flag = click.option("--pdmp", is_flag=True, help="MODEL_FILE holds two switched regimes.")
_i0 = click.option("--i0", type=click.Choice(["1", "2", "stationary"]), default="1", show_default=True,
                   help="Initial regime for --pdmp.")


def _i0_value(text: str):
    return None if text == "stationary" else int(text)


@main.command()
@click.argument("model_file", type=click.Path(dir_okay=False))
@_z0
@_T
@_h
@_seed
@click.option("--stride", type=int, default=1, show_default=True, help="Steps per recorded sample.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Path CSV.")
@_pdmp_flag
@_i0
@click.option("--boundary", type=click.Choice(["1", "2"]), default=None, help="Simulate one species alone on its axis.")
def simulate(model_file, z0, T, h, seed, stride, out, pdmp, i0, boundary):
    """Write one seeded path of MODEL_FILE as CSV."""
    if pdmp and boundary:
        raise click.UsageError("--pdmp and --boundary are exclusive")
    cfg = _base_config(model_file)
    cfg.update(z0=_parse_pair(z0), T=T, h=h, seed=seed, stride=stride, out=out,
               pdmp=pdmp, i0=_i0_value(i0), boundary=boundary)
    _execute("simulate", cfg)


@main.command()
@click.argument("model_file", type=click.Path(dir_okay=False))
@_z0
@_T
@_h
@_seed
@click.option("--n", "n", type=click.IntRange(min=1), default=100, show_default=True, help="Number of paths.")
@click.option("--floor", type=float, default=1e-8, show_default=True, help="Extinction floor.")
@click.option("--stride", type=int, default=10, show_default=True, help="Steps per recorded sample.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Report JSON (stdout if omitted).")
@_pdmp_flag
@_i0
def montecarlo(model_file, z0, T, h, seed, n, floor, stride, out, pdmp, i0):
    """Extinction frequencies over N seeded paths."""
    cfg = _base_config(model_file)
    cfg.update(z0=_parse_pair(z0), T=T, h=h, seed=seed, n=n, floor=floor, stride=stride,
               out=out, pdmp=pdmp, i0=_i0_value(i0))
    _execute("montecarlo", cfg)


@main.command("pdmp-lambdas")
@click.argument("model_file", type=click.Path(dir_okay=False))
@click.option("--T", "T", type=float, default=1e4, show_default=True, help="Horizon of each axis run.")
@_h
@_seed
@click.option("--i0", type=click.Choice(["1", "2"]), default="1", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def pdmp_lambdas(model_file, T, h, seed, i0, out):
    """Switched-system invasion rates with batch-means standard errors."""
    cfg = _base_config(model_file)
    cfg.update(T=T, h=h, seed=seed, i0=int(i0), out=out)
    _execute("pdmp-lambdas", cfg)


@main.command()
@click.argument("manifest_file", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the primary output here instead.")
def replay(manifest_file, out):
    """Re-run the command recorded in MANIFEST_FILE."""
    manifest = _read_json_or_exit(manifest_file)
    command = manifest.get("command")
    if command not in RUNNERS or not isinstance(manifest.get("config"), dict):
        click.echo(f"error: {manifest_file} is not a manifest", err=True)
        sys.exit(EXIT_INPUT)
    cfg = dict(manifest["config"])
    if out is not None:
        cfg["out"] = out
    _execute(command, cfg)


if __name__ == "__main__":
    main()
