"""Command-line pipelines over the fixture library.

    python -m gext.cli geomext --fixture cone --coeffs F2 --out out/

Every run writes ``<subcommand>.json`` and ``<subcommand>.txt`` into the
output directory.  Exit codes: 0 success, 2 a certificate failed, 3 the
decomposition is undecided (possible over Q only).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .cellposet import Stratification, SubdivisionBoundExceeded, identity_map
from .exactlinalg import CoefficientSpec
from .fixtures import Fixture, FixtureError, build, refined_blowdown
from .geomext import (
    NotALocalSystem,
    ResolutionError,
    ResolutionSpec,
    compare_resolutions,
    deligne_ic_model,
    extension_report,
    fibre_table,
    geometric_extension,
    monodromy,
    pushforward_model,
    stalk_bound_check,
    stalk_table,
)
from .ksengine import decompose, iso_test, verify_iso
from .sixfunctors import verdier_dual

log = logging.getLogger("gext")

REPORT_VERSION = "1.0"
SUBCOMMANDS = ["pushforward", "decompose", "geomext", "ic", "compare", "dualize", "monodromy", "report"]
EXIT_OK, EXIT_CERT, EXIT_UNDECIDED = 0, 2, 3


@dataclass
class RunConfig:
    subcommand: str
    coeffs: str = "F2"
    seed: int = 0
    fixture: str = "cone"
    fixture_params: Dict[str, object] = field(default_factory=dict)
    strat: Optional[str] = None
    out: Optional[str] = None
    subdivision_bound: int = 20000
    truncation: str = "unshifted"
    degree: int = 1

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        return cls(**data)


class CertificateFailure(RuntimeError):
    def __init__(self, msg: str, witness=None):
        super().__init__(msg)
        self.witness = witness


# ----------------------------------------------------------------------
# fixture plumbing
# ----------------------------------------------------------------------


def _strat(fx: Fixture, cfg: RunConfig) -> Optional[Stratification]:
    if cfg.strat:
        return Stratification.from_json(fx.complex, json.loads(Path(cfg.strat).read_text()))
    return fx.strat


def _open_set(fx: Fixture, strat: Optional[Stratification]) -> frozenset:
    if "U" in fx.cells:
        return fx.cells["U"]
    if strat is not None:
        return strat.strata[0]
    return frozenset(range(fx.complex.n))


def resolution_specs(fx: Fixture, cfg: RunConfig) -> List[ResolutionSpec]:
    """The resolutions a fixture ships with, main one first."""
    strat = _strat(fx, cfg)
    U = _open_set(fx, strat)
    rd = fx.real_dim
    if fx.name == "cone":
        specs = [ResolutionSpec(fx.maps["resolution"], U, real_dim=rd, name="blow-up")]
        if cfg.subcommand == "compare":
            Xs, g = refined_blowdown()
            if Xs.n > cfg.subdivision_bound:
                raise SubdivisionBoundExceeded(f"refinement has {Xs.n} cells > {cfg.subdivision_bound}")
            specs.append(ResolutionSpec(g, U, real_dim=rd, resolution=False, name="stellar refinement"))
        return specs
    if fx.name == "cylinder":
        return [ResolutionSpec(fx.maps["resolution"], U, real_dim=rd, name="blow-up"),
                ResolutionSpec(identity_map(fx.complex), U, real_dim=rd, name="identity")]
    if fx.name == "suspension" and "collared" in fx.maps:
        return [ResolutionSpec(fx.maps["resolution"], U, real_dim=rd, name="double"),
                ResolutionSpec(fx.maps["collared"], U, real_dim=rd, resolution=False, name="collared double")]
    if fx.name == "i2_local_model":
        return [ResolutionSpec(fx.maps["family"], U, real_dim=4, resolution=False, smooth_proper=True,
                               name="family")]
    if fx.name == "product":
        pr = fx.maps["pr2"]
        return [ResolutionSpec(pr, frozenset(range(pr.target.n)), resolution=False, smooth_proper=True,
                               name="projection")]
    return [ResolutionSpec(identity_map(fx.complex), frozenset(range(fx.complex.n)), real_dim=rd,
                           name="identity")]


def _graded(d: Dict[int, int]) -> Dict[str, int]:
    return {str(n): int(v) for n, v in sorted(d.items()) if v}


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def _pushforward(fx, cfg, C) -> Tuple[dict, str, int]:
    spec = resolution_specs(fx, cfg)[0]
    P = pushforward_model(spec, C)[1]
    T = stalk_table(P, _strat(fx, cfg))
    return {"pushforward": {"generators": P.n, "stalk_table": T.to_json()}}, T.text(), EXIT_OK


def _decompose(fx, cfg, C):
    spec = resolution_specs(fx, cfg)[0]
    P = pushforward_model(spec, C)[1]
    D = decompose(P, cfg.seed)
    strat = _strat(fx, cfg)
    parts = [stalk_table(s.complex, strat, costalks=False).to_json() for s in D.summands]
    data = {"decomposition": {"summands": parts, "certificates": {k: bool(v) for k, v in sorted(D.certificates.items())},
                              "undecided": bool(D.undecided)}}
    text = f"{len(D.summands)} summand(s)\n" + "\n\n".join(
        stalk_table(s.complex, strat, costalks=False).text() for s in D.summands)
    code = EXIT_UNDECIDED if D.undecided else (EXIT_OK if all(D.certificates.values()) else EXIT_CERT)
    return data, text, code


def _geomext(fx, cfg, C):
    spec = resolution_specs(fx, cfg)[0]
    E = geometric_extension(spec, C, cfg.seed)
    strat = _strat(fx, cfg)
    data = extension_report(E, strat)
    code = EXIT_UNDECIDED if E.undecided else (EXIT_OK if E.certified else EXIT_CERT)
    return data, stalk_table(E.complex, strat).text(), code


def _ic(fx, cfg, C):
    strat = _strat(fx, cfg)
    if strat is None:
        raise CertificateFailure("the ic pipeline needs a stratification")
    M = deligne_ic_model(fx.complex, strat, C)
    T = stalk_table(M, strat)
    return {"ic": {"truncation": cfg.truncation, "stalk_table": T.to_json()}}, T.text(), EXIT_OK


def _compare(fx, cfg, C):
    specs = resolution_specs(fx, cfg)
    if len(specs) < 2:
        raise CertificateFailure(f"fixture {fx.name} ships a single resolution")
    c = compare_resolutions(specs[0], specs[1], C, cfg.seed)
    data = {"compare": {"specs": [s.name for s in specs[:2]], "isomorphic": c.isomorphic,
                        "verified": c.verified, "triangle": c.triangle, "invariant": c.invariant}}
    verdict = "isomorphic" if c.isomorphic else f"not isomorphic: {c.invariant}"
    code = EXIT_OK if c.isomorphic and c.verified and c.triangle else EXIT_CERT
    if c.first.undecided or c.second.undecided:
        code = EXIT_UNDECIDED
    return data, f"{specs[0].name} vs {specs[1].name}: {verdict}", code


def _dualize(fx, cfg, C):
    spec = resolution_specs(fx, cfg)[0]
    P = pushforward_model(spec, C)[1]
    DP = verdier_dual(P)
    DDP = verdier_dual(DP)
    r = iso_test(P, DDP.minimize().complex, cfg.seed)
    ok = bool(r) and verify_iso(r)
    strat = _strat(fx, cfg)
    T = stalk_table(DP.minimize().complex if DP.kind == "I" else DP, strat, costalks=False)
    data = {"dualize": {"biduality": ok, "dual_stalk_table": T.to_json()}}
    return data, T.text() + f"\nD∘D ≅ id: {ok}", EXIT_OK if ok else EXIT_CERT


def _monodromy(fx, cfg, C):
    if "annulus_order" not in fx.cells:
        raise CertificateFailure(f"fixture {fx.name} has no cycle")
    spec = resolution_specs(fx, cfg)[0]
    P = pushforward_model(spec, C)[1]
    m = monodromy(P, list(fx.cells["annulus_order"]), cfg.degree)
    mat = [[int(v) if C.modulus else str(v) for v in row] for row in m.matrix.tolist()]
    can = None if m.canonical is None else [[int(v) if C.modulus else str(v) for v in row]
                                           for row in m.canonical.tolist()]
    data = {"monodromy": {"degree": cfg.degree, "matrix": mat, "canonical": can}}
    return data, f"monodromy on H^{cfg.degree}: {mat}\ncanonical form: {can}", EXIT_OK


def _report(fx, cfg, C):
    spec = resolution_specs(fx, cfg)[0]
    E = geometric_extension(spec, C, cfg.seed)
    strat = _strat(fx, cfg)
    data = extension_report(E, strat)
    ft = fibre_table(spec, C, strat)
    b = stalk_bound_check(E, ft, strat)
    data["verdicts"]["stalk_bound"] = {"holds": b.holds, "violations": [list(v) for v in b.violations]}
    data["fibres"] = {str(i): _graded(v) for i, v in sorted(ft.stalks.items())}
    text = stalk_table(E.complex, strat).text() + "\n\nfibre cohomology\n" + ft.text()
    code = EXIT_UNDECIDED if E.undecided else (EXIT_OK if E.certified and b.holds else EXIT_CERT)
    return data, text, code


PIPELINES = {
    "pushforward": _pushforward,
    "decompose": _decompose,
    "geomext": _geomext,
    "ic": _ic,
    "compare": _compare,
    "dualize": _dualize,
    "monodromy": _monodromy,
    "report": _report,
}


def run(cfg: RunConfig) -> Tuple[dict, str, int]:
    """Execute one pipeline; returns (JSON report, text report, exit code)."""
    if cfg.subcommand not in PIPELINES:
        raise ValueError(f"unknown subcommand {cfg.subcommand!r}")
    C = CoefficientSpec.parse(cfg.coeffs)
    report = {"version": REPORT_VERSION, "config": cfg.to_json()}
    try:
        fx = build(cfg.fixture, **cfg.fixture_params)
        data, text, code = PIPELINES[cfg.subcommand](fx, cfg, C)
    except (CertificateFailure, ResolutionError, NotALocalSystem, FixtureError, SubdivisionBoundExceeded) as e:
        witness = getattr(e, "witness", None)
        report["error"] = {"type": type(e).__name__, "message": str(e), "witness": witness}
        return report, f"error: {e}", EXIT_CERT
    report.update(data)
    report["exit_code"] = code
    return report, text, code


def write_reports(cfg: RunConfig, report: dict, text: str) -> None:
    if not cfg.out:
        return
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{cfg.subcommand}.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out / f"{cfg.subcommand}.txt").write_text(text + "\n")


def parse_args(argv: Optional[List[str]] = None) -> RunConfig:
    ap = argparse.ArgumentParser(prog="gext", description="geometric extension pipelines on cell-complex fixtures")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--coeffs", default="F2", help="Q, Fp (e.g. F2, F5) or Z/p^k (e.g. Z/4)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--fixture", default="cone")
    ap.add_argument("--params", default="{}", help="fixture parameters as JSON")
    ap.add_argument("--strat", default=None, help="stratification JSON file")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--subdivision-bound", type=int, default=20000)
    ap.add_argument("--degree", type=int, default=1, help="cohomological degree for monodromy")
    ap.add_argument("-v", "--verbose", action="store_true")
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING)
    return RunConfig(a.subcommand, a.coeffs, a.seed, a.fixture, json.loads(a.params), a.strat, a.out,
                     a.subdivision_bound, degree=a.degree)


def main(argv: Optional[List[str]] = None) -> int:
    cfg = parse_args(argv)
    report, text, code = run(cfg)
    write_reports(cfg, report, text)
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
