"""Command-line front end: build states, run measures, run the absorption
mapping, and produce scaling sweeps and the classification table.

Exit codes: 0 success, 2 input error, 3 measure undefined for the input,
4 numerical-tolerance failure. Outputs are deterministic: floats carry 12
significant digits and every document embeds {tool, version, configHash,
seed}. MACROSIZE_THREADS caps sweep workers (see scaling).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .mapping import (
    approx_absorb,
    exact_propagate,
    joint_from_photonic,
    mapping_fidelity,
    vacuum_projected_spin,
    verify_disentangling_identity,
    verify_operator_map,
)
from .measures import (
    Homodyne,
    PhotonCount,
    SuperpositionPair,
    c_delta,
    d_bar,
    index_q,
    m_squared,
    max_variance_collective,
    n_eff,
    relative_fisher,
    size_pg,
    wigner_I_photonic,
    wigner_I_spin,
)
from .scaling import (
    DEFAULT_LADDER,
    DEFAULT_M_LADDER,
    FamilyId,
    StateFamily,
    branch_pair,
    sweep,
    sweep_fixed_excitation,
    table1,
)
from .states import StateSpec, state_from_dict, state_to_dict
from .symcore import (
    ContractViolation,
    DensityOp,
    DickeBasis,
    PhotonicState,
    SymState,
    TruncationError,
)

PAIR_MEASURES = frozenset({"m2", "rel-fisher", "c-delta", "d-bar", "size-pg"})
SINGLE_MEASURES = frozenset(
    {"max-variance", "index-p", "n-eff", "index-q", "i-wigner", "i-wigner-spin"}
)


class UndefinedForInput(Exception):
    """Measure has no value for this input; maps to exit code 3."""


class ToleranceFailure(Exception):
    """A requested numerical tolerance was not met; maps to exit code 4."""


@dataclass(frozen=True)
class Config:
    """Run configuration recorded (hashed) in every output header."""

    eig_residual: float = 1e-9
    truncation_tail: float = 1e-10
    bisection_rtol: float = 1e-4
    spin_factor: int = 200
    output_format: str = "json"
    seed: int = 7

    def __post_init__(self):
        for name in ("eig_residual", "truncation_tail", "bisection_rtol"):
            if getattr(self, name) <= 0:
                raise ContractViolation(f"{name} must be > 0")
        if self.spin_factor < 4:
            raise ContractViolation("spin factor must be >= 4 to hold the excitations")
        if self.output_format not in ("json", "csv", "text"):
            raise ContractViolation(f"unknown output format {self.output_format!r}")

    def hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def header(self) -> dict:
        return {
            "tool": "macrosize",
            "version": __version__,
            "configHash": self.hash(),
            "seed": self.seed,
        }


def _jsonable(obj):
    """Round floats to 12 significant digits; map non-finite to null."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.12g}") if np.isfinite(obj) else None
    if isinstance(obj, (int, str)) or obj is None:
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return str(obj)


def _emit(doc: dict):
    print(json.dumps(_jsonable(doc), indent=2, sort_keys=True))


def _write_json(path: str, doc: dict):
    with open(path, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _header_comment(cfg: Config) -> str:
    h = cfg.header()
    return f"# tool={h['tool']} version={h['version']} configHash={h['configHash']} seed={h['seed']}\n"


def _load_doc(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _load_states(paths: list[str]):
    """Returns (single_state, None) or (None, SuperpositionPair)."""
    docs = [_load_doc(p) for p in paths]
    if len(docs) == 1 and "pair" in docs[0]:
        a, b = docs[0]["pair"]
        return None, SuperpositionPair(state_from_dict(a), state_from_dict(b))
    states = [state_from_dict(d["state"] if "state" in d else d) for d in docs]
    if len(states) == 1:
        return states[0], None
    if len(states) == 2:
        return None, SuperpositionPair(states[0], states[1])
    raise ContractViolation("give one state file, one pair file, or two state files")


def _parse_alpha(text: str) -> complex:
    try:
        return complex(text)
    except ValueError as exc:
        raise ContractViolation(f"cannot parse amplitude {text!r}") from exc


def _parse_ladder(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ContractViolation(f"ladder must be comma-separated integers, got {text!r}") from exc


def _state_summary(s) -> dict:
    if isinstance(s, DensityOp):
        mat = s.matrix
        if isinstance(s.basis, DickeBasis):
            labels = np.arange(s.basis.dim, dtype=float)
        else:
            n = np.arange(s.basis.cutoff + 1, dtype=float)
            labels = n if s.basis.modes == 1 else (n[:, None] + n[None, :]).ravel()
        mean = float(np.real(np.diag(mat)) @ labels)
        return {
            "basisTag": state_to_dict(s)["basisTag"],
            "trace": float(np.trace(mat).real),
            "meanExcitation": mean,
        }
    mean = s.mean_excitation if isinstance(s, SymState) else s.mean_photon
    return {
        "basisTag": state_to_dict(s)["basisTag"],
        "norm": float(np.linalg.norm(s.amps)),
        "meanExcitation": float(mean),
    }


def cmd_state(args, cfg: Config) -> int:
    params = {}
    if args.N is not None:
        params["N"] = args.N
    if args.alpha is not None:
        params["alpha"] = _parse_alpha(args.alpha)
    if args.d is not None:
        params["d"] = args.d
    if args.M is not None:
        params["M"] = args.M
    if args.k is not None:
        params["k"] = args.k
    if args.K is not None:
        params["K"] = args.K
    if args.cutoff is not None:
        params["cutoff"] = args.cutoff
    if args.pair:
        pair = branch_pair(
            args.name,
            alpha=params.get("alpha"),
            N=params.get("N"),
            M=params.get("M"),
            cutoff=params.get("cutoff"),
        )
        doc = {
            "header": cfg.header(),
            "pair": [state_to_dict(pair.psi0), state_to_dict(pair.psi1)],
        }
        summary = {
            "header": cfg.header(),
            "pair": [_state_summary(pair.psi0), _state_summary(pair.psi1)],
            "overlap": pair.overlap,
        }
    else:
        state = StateSpec(args.name, params).build()
        doc = {"header": cfg.header(), "state": state_to_dict(state)}
        summary = {"header": cfg.header(), **_state_summary(state)}
    if args.out:
        _write_json(args.out, doc)
        summary["out"] = args.out
    _emit(summary)
    return 0


def _absorb_inputs(single, pair, M: int):
    """Map photonic inputs onto the spin sector when -M is given."""
    if single is not None and isinstance(single, PhotonicState):
        return approx_absorb(single, M), None
    if pair is not None and not pair.is_spin:
        mean = max(pair.psi0.mean_photon, pair.psi1.mean_photon)
        from .symcore import default_spin_truncation

        K = min(M, max(pair.psi0.cutoff, default_spin_truncation(M, mean)))
        return None, SuperpositionPair(
            approx_absorb(pair.psi0, M, K), approx_absorb(pair.psi1, M, K)
        )
    return single, pair


def cmd_measure(args, cfg: Config) -> int:
    mid = args.measure
    single, pair = _load_states(args.files)
    needs_spin = mid in (
        "max-variance", "index-p", "n-eff", "index-q", "i-wigner-spin",
        "m2", "rel-fisher", "c-delta", "d-bar",
    )
    if needs_spin and args.M is not None:
        single, pair = _absorb_inputs(single, pair, args.M)
    if mid in PAIR_MEASURES:
        if pair is None:
            raise UndefinedForInput(f"{mid} needs a branch pair, got a single state")
    elif mid in SINGLE_MEASURES:
        if single is None:
            raise ContractViolation(f"{mid} takes a single state, got a pair")
    else:
        raise ContractViolation(f"unknown measure {mid!r}")

    if mid == "max-variance":
        result = max_variance_collective(single)
    elif mid == "index-p":
        mv = max_variance_collective(single)
        from .measures import MeasureResult

        result = MeasureResult("index-p", mv.value / single.basis.M, witness=dict(mv.witness))
    elif mid == "n-eff":
        result = n_eff(single)
    elif mid == "index-q":
        result = index_q(single)
    elif mid == "i-wigner":
        result = wigner_I_photonic(single)
    elif mid == "i-wigner-spin":
        result = wigner_I_spin(single)
    elif mid == "m2":
        result = m_squared(pair)
    elif mid == "rel-fisher":
        result = relative_fisher(pair)
    elif mid == "c-delta":
        result = c_delta(pair, args.delta)
    elif mid == "d-bar":
        result = d_bar(pair)
    else:  # size-pg
        channel = Homodyne(args.angle) if args.channel == "homodyne" else PhotonCount()
        result = size_pg(pair, args.pg, channel, bisection_rtol=cfg.bisection_rtol)

    _emit({"header": cfg.header(), **result.to_dict()})
    return 0 if result.defined else 3


def cmd_absorb(args, cfg: Config) -> int:
    single, pair = _load_states([args.file])
    if pair is not None or not isinstance(single, PhotonicState):
        raise ContractViolation("absorb takes one single-mode photonic state file")
    if args.mode == "approx":
        spin = approx_absorb(single, args.M, args.K)
        info = {"mode": "approx", "M": args.M, "K": spin.basis.K}
    else:
        report = mapping_fidelity(single, args.M, g=args.g)
        joint = exact_propagate(joint_from_photonic(single, args.M, args.K), args.g)
        spin, residual = vacuum_projected_spin(joint)
        info = {
            "mode": "exact",
            "M": args.M,
            "K": spin.basis.K,
            "g": args.g,
            "fidelityVsApprox": report.fidelity,
            "residualPhotonPopulation": residual,
        }
    doc = {"header": cfg.header(), "state": state_to_dict(spin), "absorb": info}
    if args.out:
        _write_json(args.out, doc)
    _emit({"header": cfg.header(), **info, **_state_summary(spin),
           **({"out": args.out} if args.out else {})})
    return 0


def cmd_table1(args, cfg: Config) -> int:
    ladder = _parse_ladder(args.ladder) if args.ladder else DEFAULT_LADDER
    m_ladder = _parse_ladder(args.m_ladder) if args.m_ladder else DEFAULT_M_LADDER
    rep = table1(
        ladder,
        spin_rule=lambda n: cfg.spin_factor * n,
        delta=args.delta,
        p_g=args.pg,
        m_ladder=m_ladder,
    )
    fmt = args.format or cfg.output_format
    if fmt == "text":
        body = _header_comment(cfg) + rep.to_text()
    elif fmt == "csv":
        body = _header_comment(cfg) + rep.to_csv()
    else:
        body = json.dumps(_jsonable(_report_doc(rep, cfg)), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(body)
        _emit(_report_doc(rep, cfg))
    elif fmt == "json":
        _emit(_report_doc(rep, cfg))
    else:
        sys.stdout.write(body if body.endswith("\n") else body + "\n")
    return 0


def _report_doc(rep, cfg: Config) -> dict:
    return {
        "header": cfg.header(),
        "ladder": list(rep.ladder),
        "mLadder": list(rep.m_ladder),
        "delta": rep.delta,
        "pG": rep.p_g,
        "cells": [
            {
                "measure": c.measure_id,
                "family": c.family_id.value,
                "class": c.classification,
                "exponent": c.exponent,
                "ci95": c.ci95,
                "target": c.target,
                "flag": c.flag,
            }
            for c in rep.cells
        ],
    }


def cmd_sweep(args, cfg: Config) -> int:
    fid = FamilyId(args.family)
    if args.fixed_N is not None:
        m_ladder = _parse_ladder(args.m_ladder) if args.m_ladder else DEFAULT_M_LADDER
        res = sweep_fixed_excitation(
            fid, args.measure, N=args.fixed_N, m_ladder=m_ladder,
            delta=args.delta, p_g=args.pg,
        )
    else:
        ladder = _parse_ladder(args.ladder) if args.ladder else DEFAULT_LADDER
        family = StateFamily(fid, ladder, lambda n: cfg.spin_factor * n)
        res = sweep(family, args.measure, delta=args.delta, p_g=args.pg)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(_header_comment(cfg))
            fh.write(res.points_csv())
    fit = res.fit
    _emit(
        {
            "header": cfg.header(),
            "family": fid.value,
            "measure": args.measure,
            "sweepVariable": res.sweep_variable,
            "points": [
                {"size": p.size, "M": p.M, "value": p.value, "defined": p.defined}
                for p in res.points
            ],
            "fit": {
                "exponent": fit.exponent,
                "intercept": fit.intercept,
                "ci95": fit.ci95,
                "residual": fit.residual,
                "defined": fit.defined,
                "note": fit.note,
            },
            **({"out": args.out} if args.out else {}),
        }
    )
    return 0 if fit.defined else 3


def cmd_verify_mapping(args, cfg: Config) -> int:
    doc: dict = {"header": cfg.header(), "M": args.M, "K": args.K, "g": args.g}
    dev = verify_operator_map(args.M, args.K, g=args.g)
    doc["operatorMapDeviation"] = dev
    doc["deviationTimesM"] = dev * args.M
    if args.alpha is not None:
        rep = mapping_fidelity(
            StateSpec("coherent", {"alpha": _parse_alpha(args.alpha)}).build(), args.M, g=args.g
        )
        doc["fidelityVsApprox"] = rep.fidelity
        doc["residualPhotonPopulation"] = rep.residual_photon_population
    if args.jmax is not None:
        worst = 0.0
        j = 0.5
        while j <= args.jmax + 1e-9:
            worst = max(worst, verify_disentangling_identity(j, args.lam))
            j += 0.5
        doc["disentanglingWorstDeviation"] = worst
        doc["disentanglingLambda"] = args.lam
    _emit(doc)
    if args.max_deviation is not None and dev > args.max_deviation:
        raise ToleranceFailure(
            f"operator-map deviation {dev:.3e} exceeds {args.max_deviation:.3e}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="macrosize",
        description="Effective-size measures for macroscopic photonic/spin superpositions.",
    )
    p.add_argument("--seed", type=int, default=7, help="recorded in output headers")
    p.add_argument("--output-format", choices=["json", "csv", "text"], default="json")
    p.add_argument("--spin-factor", type=int, default=200, help="default M(N) = factor*N")
    p.add_argument("--eig-residual", type=float, default=1e-9)
    p.add_argument("--truncation-tail", type=float, default=1e-10)
    p.add_argument("--bisection-rtol", type=float, default=1e-4)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("state", help="build a named state (or its branch pair)")
    ps.add_argument("--name", required=True, choices=StateSpec._NAMES)
    ps.add_argument("--N", type=int)
    ps.add_argument("--alpha")
    ps.add_argument("--d", type=float)
    ps.add_argument("--M", type=int)
    ps.add_argument("--k", type=int)
    ps.add_argument("--K", type=int)
    ps.add_argument("--cutoff", type=int)
    ps.add_argument("--pair", action="store_true", help="emit the branch pair file")
    ps.add_argument("--out")
    ps.set_defaults(func=cmd_state)

    pm = sub.add_parser("measure", help="evaluate one measure on a state or pair")
    pm.add_argument("measure")
    pm.add_argument("files", nargs="+")
    pm.add_argument("--delta", type=float, default=0.25)
    pm.add_argument("--pg", type=float, default=2.0 / 3.0)
    pm.add_argument("--channel", choices=["photon-count", "homodyne"], default="photon-count")
    pm.add_argument("--angle", type=float, default=0.0)
    pm.add_argument("--M", type=int, help="absorb photonic input into M spins first")
    pm.set_defaults(func=cmd_measure)

    pa = sub.add_parser("absorb", help="map a photonic state onto the spin ensemble")
    pa.add_argument("file")
    pa.add_argument("--M", type=int, required=True)
    pa.add_argument("--mode", choices=["approx", "exact"], default="approx")
    pa.add_argument("--g", type=float, default=float(np.pi / 2))
    pa.add_argument("--K", type=int)
    pa.add_argument("--out")
    pa.set_defaults(func=cmd_absorb)

    pt = sub.add_parser("table1", help="run the 8x4 classification table")
    pt.add_argument("--ladder", help="comma-separated N values (default 8,16,32,64)")
    pt.add_argument("--m-ladder", help="comma-separated M values for the M-sweep cell")
    pt.add_argument("--delta", type=float, default=0.25)
    pt.add_argument("--pg", type=float, default=2.0 / 3.0)
    pt.add_argument("--format", choices=["json", "csv", "text"])
    pt.add_argument("--out")
    pt.set_defaults(func=cmd_table1)

    pw = sub.add_parser("sweep", help="sweep one measure along a family ladder")
    pw.add_argument("family", choices=[f.value for f in FamilyId])
    pw.add_argument("measure")
    pw.add_argument("--ladder", help="comma-separated N values")
    pw.add_argument("--fixed-N", type=int, help="sweep M at this fixed N instead")
    pw.add_argument("--m-ladder", help="comma-separated M values (with --fixed-N)")
    pw.add_argument("--delta", type=float, default=0.25)
    pw.add_argument("--pg", type=float, default=2.0 / 3.0)
    pw.add_argument("--out")
    pw.set_defaults(func=cmd_sweep)

    pv = sub.add_parser("verify-mapping", help="absorption-map diagnostics")
    pv.add_argument("--M", type=int, required=True)
    pv.add_argument("--K", type=int, required=True)
    pv.add_argument("--g", type=float, default=float(np.pi / 2))
    pv.add_argument("--alpha", help="also report exact-vs-approx fidelity for this coherent state")
    pv.add_argument("--jmax", type=float, help="also verify the disentangling identity up to this j")
    pv.add_argument("--lam", type=float, default=1.2)
    pv.add_argument("--max-deviation", type=float, help="exit 4 if the operator-map deviation exceeds this")
    pv.set_defaults(func=cmd_verify_mapping)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = Config(
            eig_residual=args.eig_residual,
            truncation_tail=args.truncation_tail,
            bisection_rtol=args.bisection_rtol,
            spin_factor=args.spin_factor,
            output_format=args.output_format,
            seed=args.seed,
        )
        return args.func(args, cfg)
    except UndefinedForInput as exc:
        print(f"undefined: {exc}", file=sys.stderr)
        return 3
    except ToleranceFailure as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return 4
    except (ContractViolation, TruncationError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
