"""Command line: ``ramanpert decompose|compare|sweep --config run.yaml``.

The config is YAML (JSON is accepted as well, being a YAML subset):

.. code-block:: yaml

    space:   {modes: 1, fock_cutoff: 20, buffer: 10, n_phys: 10}
    ion:     {omega1: 0.0, omega2: 0.37, omega3: 12.0, nu: 0.5}
    schemes:
      - {g13_re: 1.0, g13_im: 0.0, g23_re: 1.0, g23_im: 0.0,
         eta13: [0.1], eta23: [-0.1], detuning: 100.0}
    run:     {t_final: 628.3, dt: 0.0001, samples: 201}
    output:  {directory: out, formats: [csv, json]}

Exit codes: 0 success, 2 config error, 3 resonance/validation error,
4 integrator step error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import experiments, perturb, raman
from .errors import (
    ConfigError,
    InvalidHamiltonian,
    InvalidScheme,
    NearResonance,
    RamanPertError,
    SpaceMismatch,
    StepTooLarge,
)
from .hilbert import SpaceSpec, interior_distance

EXIT_OK, EXIT_CONFIG, EXIT_RESONANCE, EXIT_STEP = 0, 2, 3, 4


# schema ----------------------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpaceSection(_Strict):
    modes: int = Field(1, ge=0)
    fock_cutoff: int = Field(20, ge=1)
    buffer: int = Field(10, ge=0)
    n_phys: int = Field(10, ge=0)


class IonSection(_Strict):
    omega1: float
    omega2: float
    omega3: float
    nu: float = Field(gt=0)


class SchemeSection(_Strict):
    g13_re: float
    g13_im: float = 0.0
    g23_re: float
    g23_im: float = 0.0
    eta13: list[float]
    eta23: list[float]
    detuning: float


class RunSection(_Strict):
    t_final: Optional[float] = Field(None, gt=0)
    dt: float = Field(gt=0)
    samples: Union[int, list[float]] = 101
    lambda_override: Optional[float] = None


class OutputSection(_Strict):
    directory: str = "out"
    formats: list[Literal["csv", "json"]] = ["csv", "json"]


class RunConfig(_Strict):
    space: SpaceSection = SpaceSection()
    ion: IonSection
    schemes: list[SchemeSection] = Field(min_length=1)
    run: RunSection
    output: OutputSection = OutputSection()

    def raman_config(self) -> raman.RamanConfig:
        sp = self.space
        space = SpaceSpec(atomic_dim=3, mode_count=sp.modes, fock_cutoff=sp.fock_cutoff, buffer=sp.buffer)
        if sp.n_phys > sp.fock_cutoff:
            raise ConfigError(f"space.n_phys={sp.n_phys} exceeds space.fock_cutoff={sp.fock_cutoff}")
        try:
            return self._build(space)
        except (InvalidScheme, SpaceMismatch) as exc:
            raise ConfigError(f"inconsistent model parameters: {exc}") from exc

    def _build(self, space: SpaceSpec) -> raman.RamanConfig:
        pairs = tuple(
            raman.LaserPair(
                g13=complex(s.g13_re, s.g13_im),
                g23=complex(s.g23_re, s.g23_im),
                eta13=tuple(s.eta13),
                eta23=tuple(s.eta23),
                detuning=s.detuning,
            )
            for s in self.schemes
        )
        cfg = raman.RamanConfig(
            level_freqs=(self.ion.omega1, self.ion.omega2, self.ion.omega3),
            trap_freq=self.ion.nu,
            schemes=pairs,
            space=space,
        )
        if self.run.lambda_override is not None:
            cfg = raman.with_lambda(cfg, self.run.lambda_override)
        return cfg


def _yaml_line(text: str, loc) -> int | None:
    """1-based line of the node addressed by a pydantic error location."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    line = node.start_mark.line + 1 if node is not None else None
    for part in loc:
        if isinstance(node, yaml.MappingNode):
            match = [v for k, v in node.value if k.value == part]
            if not match:
                # unknown keys: point at the key itself
                keys = [k for k, _ in node.value if k.value == part]
                return keys[0].start_mark.line + 1 if keys else line
            node = match[0]
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
        else:
            break
        line = node.start_mark.line + 1
    return line


def load_config(path: str | os.PathLike) -> RunConfig:
    """Parse and validate; every failure becomes a ConfigError with a location."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ConfigError(f"{path}: {where}malformed document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    try:
        return RunConfig.model_validate(doc)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            field = ".".join(str(p) for p in err["loc"])
            line = _yaml_line(text, err["loc"])
            where = f"line {line}, " if line else ""
            msgs.append(f"{path}: {where}field '{field}': {err['msg']}")
        raise ConfigError("\n".join(msgs)) from exc


# output ----------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_json(path: Path, doc):
    _atomic_write(path, json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n")


def write_csv(path: Path, header: list[str], rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[h]) for h in header])
    _atomic_write(path, buf.getvalue())


def _matrix_doc(op) -> dict:
    return {"real": op.matrix.real.tolist(), "imag": op.matrix.imag.tolist()}


def _model_doc(cfg: raman.RamanConfig) -> dict:
    model = raman.analytic_effective_model(cfg)
    return {
        "lambda": cfg.perturbative_parameter,
        "coupling_scale": cfg.coupling_scale,
        "detunings": [s.detuning for s in cfg.schemes],
        "stark_shifts": list(model.shifts),
        "couplings": [
            {
                "g12_re": c.g12.real,
                "g12_im": c.g12.imag,
                "eta12": list(c.eta12),
                "omega12": c.omega12,
            }
            for c in model.couplings
        ],
    }


# commands --------------------------------------------------------------------


def _out_dir(rc: RunConfig, override: str | None) -> Path:
    return Path(override or rc.output.directory)


def _sample_times(rc: RunConfig, t_final: float) -> list[float]:
    s = rc.run.samples
    if isinstance(s, int):
        if s < 2:
            raise ConfigError("run.samples must be >= 2 when given as a count")
        return [float(t) for t in np.linspace(0.0, t_final, s)]
    times = sorted(float(t) for t in s)
    if not times or times[0] < 0 or times[-1] > t_final:
        raise ConfigError("run.samples must lie in [0, run.t_final]")
    return times


def cmd_decompose(rc: RunConfig, out: Path) -> None:
    cfg = rc.raman_config()
    h = raman.build_interaction_orders(cfg)
    d = perturb.compute_cz_orders(h, 2)
    fmts = rc.output.formats
    summary = _model_doc(cfg)
    analytic = raman.effective_c2_operator(raman.analytic_effective_model(cfg), cfg)
    summary["c2_vs_analytic_interior"] = interior_distance(
        d.lambda_**2 * d.c[1], analytic, rc.space.n_phys
    )
    if "json" in fmts:
        write_json(out / "c_operators.json", {
            "lambda": d.lambda_,
            "units": "C_n in angular frequency per lambda**n; lambda**n C_n is physical",
            "C1": _matrix_doc(d.c[0]),
            "C2": _matrix_doc(d.c[1]),
        })
        write_json(out / "z_polys.json", {"lambda": d.lambda_, "Z1": d.z[0].to_dict(), "Z2": d.z[1].to_dict()})
        write_json(out / "summary.json", summary)


def cmd_compare(rc: RunConfig, out: Path) -> None:
    cfg = rc.raman_config()
    t_final = rc.run.t_final or raman.rabi_period(raman.analytic_effective_model(cfg))
    times = _sample_times(rc, t_final)
    res = experiments.compare(cfg, times, rc.run.dt, rc.space.n_phys)
    header = ["t", "fid_exact_vs_dressed", "fid_exact_vs_effective", "P1", "P2", "P3", "P1_eff", "P2_eff"]
    if "csv" in rc.output.formats:
        write_csv(out / "compare.csv", header, res.rows())
    if "json" in rc.output.formats:
        summary = _model_doc(cfg)
        summary.update({
            "t_final": t_final,
            "dt": res.dt,
            "integrator_error_estimate": res.integrator_error,
            "min_fid_exact_vs_dressed": min(res.fid_dressed),
            "min_fid_exact_vs_effective": min(res.fid_effective),
            "max_P3": float(res.pops_exact[:, 2].max()),
        })
        write_json(out / "summary.json", summary)


def cmd_sweep(rc: RunConfig, out: Path, lambdas: list[float]) -> None:
    if not lambdas:
        raise ConfigError("--lambdas must name at least one value")
    cfg = rc.raman_config()
    rows, slope = experiments.sweep(cfg, lambdas, rc.run.dt, rc.space.n_phys)
    if "csv" in rc.output.formats:
        write_csv(out / "sweep.csv", ["lambda", "interior_error"],
                  ({"lambda": lam, "interior_error": err} for lam, err in rows))
    if "json" in rc.output.formats:
        path = out / "summary.json"
        summary = json.loads(path.read_text()) if path.exists() else {}
        summary.update(_model_doc(cfg))
        summary["sweep"] = {
            "delta_t": 20.0,
            "lambdas": [lam for lam, _ in rows],
            "errors": [err for _, err in rows],
        }
        if slope is not None:
            summary["sweep"]["slope"] = slope
        write_json(path, summary)


def _parse_lambdas(text: str | None) -> list[float]:
    if text is None or not text.strip():
        return []
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--lambdas: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ramanpert", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=["decompose", "compare", "sweep"])
    p.add_argument("--config", required=True, help="YAML/JSON run configuration")
    p.add_argument("--out", help="output directory (overrides output.directory)")
    p.add_argument("--lambdas", help="comma separated lambda values for sweep")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = load_config(args.config)
        out = _out_dir(rc, args.out)
        if args.command == "decompose":
            cmd_decompose(rc, out)
        elif args.command == "compare":
            cmd_compare(rc, out)
        else:
            cmd_sweep(rc, out, _parse_lambdas(args.lambdas))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NearResonance as exc:
        keys = ", ".join(str(k) for k in exc.keys)
        print(f"resonance error: {exc}" + (f" [keys: {keys}]" if keys else ""), file=sys.stderr)
        return EXIT_RESONANCE
    except (InvalidScheme, InvalidHamiltonian) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except StepTooLarge as exc:
        print(f"integrator error: {exc}", file=sys.stderr)
        return EXIT_STEP
    except RamanPertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
