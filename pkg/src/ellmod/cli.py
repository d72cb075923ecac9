"""Batch front-end: run a pipeline stage, compare with golden fixtures, emit a report.

Exit codes: 0 all checks pass, 1 a check or golden comparison failed,
2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction as Fr
from importlib import resources
from pathlib import Path

from .families import get_family

COMMANDS = ["periods", "catalog", "mirror", "jcheck", "correlators", "eta", "genus1", "certify",
            "givental-check", "all"]
MIN_ORDER = {"periods": 3, "catalog": 3, "mirror": 2, "jcheck": 8, "correlators": 4, "eta": 2,
             "genus1": 2, "certify": 8, "givental-check": 0, "all": 8}
P8_ONLY = {"eta", "genus1", "certify", "givental-check"}
FAMILY_COMMANDS = {
    "P8": ["periods", "mirror", "jcheck", "correlators", "eta", "genus1", "certify", "givental-check"],
    "X9": ["periods", "catalog", "mirror", "jcheck", "correlators"],
    "J10": ["periods", "catalog", "mirror", "jcheck", "correlators"],
}
DEFAULTS = {"family": "p8", "order": "30", "emit": "json", "golden": False, "fixtures": None,
            "lambda_value": None}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    family: str
    order: Fr
    emit: str = "json"
    golden: bool = False
    fixtures: Path | None = None
    lambda_value: complex | None = None


@dataclass
class Report:
    command: str
    family: str
    order: Fr
    checks: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    golden_failures: list = field(default_factory=list)

    def check(self, name, ok, detail=""):
        self.checks.append({"name": name, "status": "pass" if ok else "fail", "detail": str(detail)})
        return ok

    @property
    def ok(self):
        return all(c["status"] == "pass" for c in self.checks)

    def to_json(self):
        return {"command": self.command, "family": self.family, "order": str(self.order),
                "checks": self.checks, "series": self.series}


# -- configuration -----------------------------------------------------------------


def read_config_file(path) -> dict:
    """key = value lines; '#' starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.replace("-", "_")
        if k not in DEFAULTS:
            raise ConfigError(f"config line {n}: unknown key {k!r}")
        out[k] = v
    return out


def _as_bool(v):
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "true", "yes", "on"):
        return True
    if str(v).lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def build_config(args) -> RunConfig:
    file_vals = read_config_file(args.config) if args.config else {}
    merged = dict(DEFAULTS)
    merged.update(file_vals)
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None and v is not False:
            merged[k] = v
    try:
        order = Fr(str(merged["order"]))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"bad order {merged['order']!r}") from None
    command = args.command
    family = str(merged["family"]).upper()
    if family not in ("P8", "X9", "J10", "ALL"):
        raise ConfigError(f"unknown family {merged['family']!r}")
    if family == "ALL" and command != "all":
        raise ConfigError("--family all is only meaningful for the 'all' command")
    if command == "all" and "family" not in file_vals and args.family is None:
        family = "ALL"
    if order < MIN_ORDER[command]:
        raise ConfigError(f"order {order} below the minimum {MIN_ORDER[command]} for {command}")
    if command in P8_ONLY and family != "P8":
        raise ConfigError(f"{command} is only configured for P8")
    if command == "catalog" and family == "P8":
        raise ConfigError("the Gauss-Manin catalog exists for X9 and J10 only")
    emit = str(merged["emit"]).lower()
    if emit not in ("json", "csv", "text"):
        raise ConfigError(f"unknown emit format {emit!r}")
    lam = merged["lambda_value"]
    if lam is not None:
        try:
            lam = complex(str(lam).replace(" ", ""))
        except ValueError:
            raise ConfigError(f"bad lambda value {lam!r}") from None
    fixtures = Path(merged["fixtures"]) if merged["fixtures"] else None
    if fixtures is not None and not fixtures.is_dir():
        raise ConfigError(f"fixtures directory {fixtures} does not exist")
    return RunConfig(command, family, order, emit, _as_bool(merged["golden"]), fixtures, lam)


# -- fixtures ----------------------------------------------------------------------


def load_fixture(name: str, directory: Path | None = None) -> dict:
    if directory is not None:
        path = directory / f"{name}.json"
        if not path.exists():
            raise ConfigError(f"fixture {path} not found")
        return json.loads(path.read_text())
    return json.loads(resources.files("ellmod").joinpath("fixtures", f"{name}.json").read_text())


def fixture_series(entry: dict, var: str = "q"):
    from .series import PuiseuxSeries

    return PuiseuxSeries({Fr(k): Fr(v) for k, v in entry["terms"].items()}, Fr(entry["prec"]), var)


def compare_golden(report: Report, label: str, computed, golden) -> bool:
    """Exact prefix comparison below the golden's precision; records the first difference."""
    if computed.prec < golden.prec:
        report.golden_failures.append(f"{label}: computed to {computed.prec}, golden needs {golden.prec}")
        return report.check(f"golden:{label}", False, "truncation too short")
    exps = sorted(set(e for e in computed.terms if e < golden.prec) | set(golden.terms))
    for e in exps:
        a, b = computed.coefficient(e), golden.coefficient(e)
        if a != b:
            msg = f"{label}: first difference at exponent {e}: expected {b}, computed {a}"
            report.golden_failures.append(msg)
            return report.check(f"golden:{label}", False, msg)
    return report.check(f"golden:{label}", True, f"{len(golden.terms)} coefficients below {golden.prec}")


def series_json(s, limit=None):
    """Sorted [exponent, coefficient] pairs."""
    items = sorted(s.terms.items())
    if limit is not None:
        items = [(e, c) for e, c in items if e < limit]
    return [[str(e), str(c)] for e, c in items]


# -- commands ------------------------------------------------------------------------


def cmd_periods(cfg, rep):
    import sympy

    from .coeffs import Cyclotomic, embed_numeric
    from .hypergeom import SIGMA, build_periods, pf_residual, wronskian
    from .jacobi import jacobi_ring
    from .series import PuiseuxSeries, apply_ode

    fam = get_family(cfg.family)
    p = build_periods(fam, cfg.order)
    ra, rb = pf_residual(p.pi_A), pf_residual(p.pi_B)
    rep.check("pf_pi_A", not ra.base.terms and not ra.log_part.terms, f"zero below u^{ra.prec}")
    rep.check("pf_pi_B", not rb.base.terms and not rb.log_part.terms, f"zero below u^{rb.prec}")
    w = (wronskian(p) * PuiseuxSeries({-3: -1, 0: 27})).truncate(cfg.order - 2)
    const = Cyclotomic.lam(-1) * (3 * fam.period_multiplier)
    ok = set(w.terms) == {Fr(0)} and w.terms[Fr(0)] == const
    rep.check("wronskian", ok, f"(27+sigma^3) W = {w.terms.get(Fr(0))}")
    B, A = jacobi_ring(fam.name).primitive_ode()
    S = SIGMA
    same = sympy.simplify(B + 3 * S**2 / (27 + S**3)) == 0 and sympy.simplify(A + S / (27 + S**3)) == 0
    rep.check("primitive_ode_matches_pf", same, f"B = {B}, A = {A}")
    # pi_A = 1/g for the primitive form g d^3x solves pi'' = B pi' + A pi
    op = [(27 + S**3, 2), (sympy.cancel(-(27 + S**3) * B), 1), (sympy.cancel(-(27 + S**3) * A), 0)]
    res = apply_ode(op, p.pi_A)
    rep.check("primitive_ode_pi_A", not res.base.terms and not res.log_part.terms, f"zero below u^{res.prec}")
    rep.series["pi_A"] = series_json(p.pi_A)
    rep.series["pi_B.regular"] = series_json(p.pi_B.base)
    rep.series["pi_B.log"] = series_json(p.pi_B.log_part)
    if cfg.lambda_value is not None:
        rep.series["pi_B.regular.numeric"] = [[str(e), repr(embed_numeric(c, cfg.lambda_value))]
                                              for e, c in sorted(p.pi_B.base.terms.items())[:8]]


def cmd_catalog(cfg, rep):
    from .hypergeom import phi_catalog, row_residual

    prec = Fr(cfg.order)
    cat = phi_catalog(cfg.family, int(prec) + 4)
    for name, comps, row in cat:
        res = row_residual(cat, name, row, prec)
        bad = {a: r.valuation() for a, r in res.items() if r.terms}
        rep.check(f"gauss_manin:{name}", not bad, "zero" if not bad else f"first residual {bad}")


def cmd_mirror(cfg, rep):
    from .mirror import mirror_for

    m = mirror_for(cfg.family, cfg.order)
    back = m.q_of_u.compose(m.u_of_q).truncate(cfg.order)
    rep.check("inverse", back.terms == {Fr(1): 1}, "q(u(q)) = q")
    rep.check("derived_r", m.denominator == (3 if cfg.family == "P8" else 9), f"r = {m.denominator}")
    rep.series["u_of_q"] = series_json(m.u_of_q)
    rep.series["derived_r"] = [[str(m.denominator), "1"]]


def cmd_jcheck(cfg, rep):
    from .mirror import j_expansion, klein_j_oracle, mirror_for

    order = int(cfg.order)
    m = mirror_for(cfg.family, order)
    j = j_expansion(m)
    if cfg.family == "P8":
        # printed q is the series variable; j(q) = Klein j(q^3)
        printed = j
        oracle = klein_j_oracle(order // 3 + 2).rescale(3)
    else:
        # printed variable e^{2 pi i tau} is the ninth power of the series variable
        printed = j.rescale(Fr(1, 9), var="q")
        oracle = klein_j_oracle(order // 9 + 2)
    n = min(printed.prec, oracle.prec)
    agree = printed.truncate(n) == oracle.truncate(n)
    extra = len([e for e in printed.terms if e < n])
    rep.check("klein_j_oracle", agree, f"{extra} nonzero coefficients below {n}")
    fx = load_fixture(f"{cfg.family.lower()}_j_expansion", cfg.fixtures)
    golden = fixture_series(fx["entries"][0], printed.var)
    if cfg.golden:
        compare_golden(rep, f"{cfg.family}:j", printed, golden)
    rep.series["j"] = series_json(printed, n)


def cmd_correlators(cfg, rep):
    from .frobenius import correlator

    fx = load_fixture(f"{cfg.family.lower()}_correlators", cfg.fixtures)
    for entry in fx["entries"]:
        golden = fixture_series(entry)
        order = max(int(cfg.order), int(golden.prec)) if cfg.golden else int(cfg.order)
        c = correlator(cfg.family, tuple(entry["insertions"]), order)
        label = "<" + ",".join(entry["insertions"]) + ">"
        if cfg.golden:
            compare_golden(rep, f"{cfg.family}:{label}", c.q_series, golden)
        else:
            n = min(golden.prec, c.q_series.prec)
            rep.check(f"prefix:{label}", c.q_series.truncate(n) == golden.truncate(n), f"below q^{n}")
        rep.series[label] = series_json(c.q_series.truncate(cfg.order))


def cmd_eta(cfg, rep):
    from .frobenius import eta_identity_check

    fx = load_fixture("p8_eta_product", cfg.fixtures)
    spec = [tuple(x) for x in fx["entries"][0]["spec"]]
    rep.check("eta_identity", eta_identity_check(int(cfg.order), spec), f"spec {spec} below q^{int(cfg.order)}")


def cmd_genus1(cfg, rep):
    from .frobenius import genus1_potential

    s = genus1_potential("P8", int(cfg.order))
    fx = load_fixture("p8_genus1", cfg.fixtures)
    golden = fixture_series(fx["entries"][0])
    if cfg.golden:
        compare_golden(rep, "P8:dF1 constant", s, golden)
    else:
        rep.check("constant_term", s.coefficient(0) == golden.coefficient(0), str(s.coefficient(0)))
    rep.series["dF1"] = series_json(s)


def cmd_certify(cfg, rep):
    from .frobenius import certify_genus1

    cert, anomaly = certify_genus1(int(cfg.order))
    rep.check("quasimodular_certificate", cert.residual_zero, json.dumps(cert.to_json(), sort_keys=True))
    rep.check("g2_anomaly", anomaly["match"], f"{anomaly['anomaly']} vs mu/24 - 1/2 = {anomaly['target']}")


def cmd_givental(cfg, rep):
    from .givental import identity_suite

    for name, ok, detail in identity_suite():
        rep.check(name, ok, detail)


HANDLERS = {"periods": cmd_periods, "catalog": cmd_catalog, "mirror": cmd_mirror, "jcheck": cmd_jcheck,
            "correlators": cmd_correlators, "eta": cmd_eta, "genus1": cmd_genus1, "certify": cmd_certify,
            "givental-check": cmd_givental}


def run(cfg: RunConfig) -> Report:
    if cfg.command != "all":
        rep = Report(cfg.command, cfg.family, cfg.order)
        HANDLERS[cfg.command](cfg, rep)
        return rep
    families = ["P8", "X9", "J10"] if cfg.family == "ALL" else [cfg.family]
    rep = Report("all", cfg.family, cfg.order)
    for fam in families:
        for cmd in FAMILY_COMMANDS[fam]:
            sub = RunConfig(cmd, fam, max(cfg.order, MIN_ORDER[cmd]), cfg.emit, cfg.golden, cfg.fixtures,
                            cfg.lambda_value)
            part = Report(cmd, fam, sub.order)
            HANDLERS[cmd](sub, part)
            for c in part.checks:
                rep.checks.append({**c, "name": f"{fam}/{cmd}/{c['name']}"})
            rep.golden_failures.extend(part.golden_failures)
    return rep


# -- output ----------------------------------------------------------------------------


def render(rep: Report, emit: str) -> str:
    if emit == "json":
        return json.dumps(rep.to_json(), sort_keys=True, indent=2) + "\n"
    if emit == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "name", "key", "value"])
        for c in rep.checks:
            w.writerow(["check", c["name"], c["status"], c["detail"]])
        for name in sorted(rep.series):
            for e, v in rep.series[name]:
                w.writerow(["series", name, e, v])
        return buf.getvalue()
    lines = [f"{rep.command} family={rep.family} order={rep.order}"]
    for c in rep.checks:
        lines.append(f"  [{c['status'].upper()}] {c['name']}: {c['detail']}")
    for name in sorted(rep.series):
        head = ", ".join(f"[{e}] {v}" for e, v in rep.series[name][:6])
        lines.append(f"  {name}: {head}{' + ...' if len(rep.series[name]) > 6 else ''}")
    return "\n".join(lines) + "\n"


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ellmod", description="Exact B-model pipelines for P8, X9 and J10.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--family", type=str.lower, choices=["p8", "x9", "j10", "all"])
    p.add_argument("--order", type=str)
    p.add_argument("--emit", choices=["json", "csv", "text"])
    p.add_argument("--golden", action="store_true", default=None)
    p.add_argument("--fixtures", type=str)
    p.add_argument("--lambda-value", dest="lambda_value", type=str,
                   help="numeric value of 2 pi i for reporting only, e.g. 6.283185307179586j")
    p.add_argument("--config", type=str, help="key = value file; command-line flags take precedence")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"ellmod: configuration error: {exc}", file=sys.stderr)
        return 2
    rep = run(cfg)
    sys.stdout.write(render(rep, cfg.emit))
    for msg in rep.golden_failures[:1]:
        print(f"ellmod: golden mismatch: {msg}", file=sys.stderr)
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())
