"""``bellkit`` command line: one subcommand per pipeline, canonical reports.

Parameter precedence is: explicit flag, then ``--config`` JSON file, then the
built-in default. ``--threads`` falls back to ``BELLKIT_THREADS``.
"""

import argparse
from dataclasses import dataclass, field
import json
import math
import sys

import numpy as np

from .embezzlement import (
    DEFAULT_CAP,
    correlation_pn,
    embezzle_identity_check,
    schmidt_report,
)
from .exceptions import BellkitError, InvalidParameter, UnknownCommand
from .qqs_witness import (
    BOUNDARY_POLICY,
    block_distances,
    block_marginal_consistency,
    proof_identity_report,
    ternary_variant,
    witness_correlation,
)
from .reports import Report, emit, error_payload
from .satwap import power_identities, canonical_satwap, formula_local_bound, sos_certificate
from .scenario import (
    bell_value,
    chsh_functional,
    correlation_from_strategy,
    lhv_max_bruteforce,
    satwap_functional,
    tilted_chsh_functional,
)
from .seesaw import SeesawConfig, resolve_threads, seesaw_maximize
from .selftest import extract_isometry, planted_strategy
from .tilted_chsh import TiltedParams, canonical_strategy

DEFAULTS = {
    "chsh-tilted": {"beta": 0.0},
    "satwap": {"d": 3, "certify": False},
    "selftest-extract": {"d": 3, "junk": "0.7,0.3", "seed": 0},
    "witness-qqs": {"alpha": 0.5, "K": 12},
    "ternary-variant": {"alpha": 0.5, "K": 12},
    "embezzle": {"n": 3},
    "seesaw": {"target": "chsh-tilted", "param": 0.0, "restarts": 20, "seed": 0,
               "max_iters": 500},
    "lhv-bound": {"target": "chsh-tilted", "param": 0.0},
}
COMMANDS = tuple(DEFAULTS)


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: str = None
    format: str = "json"
    threads: int = 1


def _require(cond, name, constraint):
    if not cond:
        raise InvalidParameter(name, constraint)


def _int_param(params, name, lo, hi=None):
    v = params[name]
    _require(isinstance(v, (int, np.integer)) and not isinstance(v, bool), name, "must be an integer")
    _require(v >= lo and (hi is None or v <= hi), name,
             f"must satisfy {lo} <= {name}" + (f" <= {hi}" if hi is not None else ""))
    return int(v)


def _float_param(params, name):
    v = params[name]
    _require(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v), name,
             "must be a finite number")
    return float(v)


def validate(config):
    """Check ``config.params`` against the target pipeline's preconditions."""
    if config.command not in DEFAULTS:
        raise UnknownCommand(f"unknown command {config.command!r}; choose from {', '.join(COMMANDS)}")
    p = config.params
    cmd = config.command
    _require(config.format in ("json", "csv"), "format", "must be json or csv")
    _require(isinstance(config.threads, int) and config.threads >= 1, "threads", "must be >= 1")
    if cmd == "chsh-tilted":
        b = _float_param(p, "beta")
        _require(0 <= b < 2, "beta", "must satisfy 0 <= beta < 2")
    elif cmd == "satwap":
        _int_param(p, "d", 2, 12)
    elif cmd == "selftest-extract":
        _int_param(p, "d", 2, 8)
        _int_param(p, "seed", 0)
        try:
            weights = [float(x) for x in str(p["junk"]).split(",")]
        except ValueError:
            raise InvalidParameter("junk", "comma-separated positive weights") from None
        _require(all(w > 0 for w in weights), "junk", "comma-separated positive weights")
    elif cmd in ("witness-qqs", "ternary-variant"):
        a = _float_param(p, "alpha")
        _require(0 < a < 1, "alpha", "must satisfy 0 < alpha < 1")
        _int_param(p, "K", 2, 60)
    elif cmd == "embezzle":
        _int_param(p, "n", 1, DEFAULT_CAP)
    elif cmd in ("seesaw", "lhv-bound"):
        _require(p["target"] in ("chsh-tilted", "satwap"), "target", "must be chsh-tilted or satwap")
        param = _float_param(p, "param")
        if p["target"] == "chsh-tilted":
            _require(0 <= param < 2, "param", "beta must satisfy 0 <= beta < 2")
        else:
            _require(param == int(param) and 2 <= param <= (5 if cmd == "seesaw" else 12), "param",
                     "d must be an integer in [2, 5] for seesaw or [2, 12] for lhv-bound")
        if cmd == "seesaw":
            _int_param(p, "restarts", 1)
            _int_param(p, "seed", 0)
            _int_param(p, "max_iters", 1)
    return config


def _functional(target, param):
    if target == "chsh-tilted":
        return tilted_chsh_functional(param), (2, 2), math.sqrt(8 + 2 * param**2)
    d = int(param)
    return satwap_functional(d), (d, d), 2.0 * (d - 1)


def _run_chsh_tilted(cfg, rep):
    params = TiltedParams.from_beta(cfg.params["beta"])
    canon = canonical_strategy(params)
    corr = canon.correlation()
    f = tilted_chsh_functional(params.beta)
    rep.add("quantum_value", params.quantum_value, "tilted_quantum_value")
    rep.add("canonical_value", bell_value(f, corr), "tilted_quantum_value")
    rep.add("operator_max_eigenvalue", float(np.linalg.eigvalsh(canon.operator())[-1]),
            "tilted_quantum_value")
    rep.add("local_bound", lhv_max_bruteforce(f).value, "tilted_local_bound")
    rep.add("local_bound_formula", params.local_value, "tilted_local_bound")
    for name in ("alpha", "theta", "mu"):
        rep.add(name, getattr(params, name), "tilted_parameters")
    rep.add_table("canonical", corr)


def _run_satwap(cfg, rep):
    d = cfg.params["d"]
    canon = canonical_satwap(d)
    f = satwap_functional(d)
    p = correlation_from_strategy(canon.strategy())
    rep.add("quantum_value", 2.0 * (d - 1), "satwap_quantum_value")
    rep.add("canonical_value", bell_value(f, p), "satwap_quantum_value")
    rep.add("operator_max_eigenvalue", float(np.linalg.eigvalsh(canon.operator())[-1]),
            "satwap_quantum_value")
    rep.add("local_bound", lhv_max_bruteforce(f).value, "satwap_local_bound")
    rep.add("local_bound_formula", float(formula_local_bound(d)), "satwap_local_bound_formula")
    if cfg.params.get("certify"):
        cert = sos_certificate(canon.state, canon.A0, canon.A1, canon.B0, canon.B1, d)
        rep.add("sos_gap", cert.gap, "sos_certificate")
        rep.add("sos_residual_max", float(np.max(cert.residuals)), "sos_certificate")
        rep.add("sos_identity_residual", cert.identity_residual, "sos_certificate")
        rep.add("observable_residual_max", max(canon.residuals().values()), "sos_certificate")
        rep.add("identity_residuals", power_identities(d), "power_identities")
    rep.add_table("canonical", p)


def _run_selftest(cfg, rep):
    d = cfg.params["d"]
    junk = [float(x) for x in str(cfg.params["junk"]).split(",")]
    strategy, planted = planted_strategy(d, junk, cfg.params["seed"])
    res = extract_isometry(strategy, d)
    rep.add("gap", res.gap, "self_test_isometry")
    rep.add("residuals", res.residuals, "self_test_isometry")
    rep.add("max_residual", res.max_residual, "self_test_isometry")
    rep.add("state_fidelity", res.state_fidelity, "self_test_state")
    rep.add("junk_spectrum", res.junk_spectrum.nonzero(), "self_test_state")
    rep.add("planted_junk_spectrum", planted, "self_test_state")
    rep.add("support_dims", res.support_dims, "diagnostic")


def _run_witness(cfg, rep):
    alpha, K = cfg.params["alpha"], cfg.params["K"]
    rep.boundary_policies["truncation"] = BOUNDARY_POLICY
    report = proof_identity_report(alpha, K)
    p = witness_correlation(alpha, K)
    rep.add("p_a1_s0", report["p_a1_s0"], "witness_marginal")
    rep.add("p_a1_s0_limit", report["p_a1_s0_limit"], "witness_marginal")
    rep.add("block_distances", block_distances(p, alpha), "witness_blocks")
    rep.add("block_marginal_consistency", block_marginal_consistency(p), "witness_blocks")
    for key in ("M_square_residual", "M_structure_residual", "D0_projector_residual",
                "A0_1_identity_residual", "marginal_chain_residual", "marginal_identity_residual"):
        rep.add(key, report[key], "witness_proof_identities")
    for key in ("value_A0_0_D0", "one_over_C_K", "one_over_C_squared", "one_over_C_K_squared",
                "lower_bound_holds"):
        rep.add(key, report[key], "witness_lower_bound")
    rep.add("truncation_drift", p.distance(witness_correlation(alpha, K + 2)), "witness_truncation")
    rep.add_table("p", p)


def _run_ternary(cfg, rep):
    alpha, K = cfg.params["alpha"], cfg.params["K"]
    rep.boundary_policies["truncation"] = BOUNDARY_POLICY
    res = ternary_variant(alpha, K)
    rep.add("relation_residuals", res.relation_residuals, "ternary_relations")
    rep.add("outcome2_max", res.outcome2_residual, "ternary_relations")
    rep.add("completeness_residual", res.completeness_residual, "ternary_relations")
    rep.add_table("q", res.q)


def _run_embezzle(cfg, rep):
    n = cfg.params["n"]
    c = correlation_pn(n)
    ident = embezzle_identity_check(n)
    rep.add("p11_20", c.p11_20, "embezzle_exact_marginals")
    rep.add("pa1_s2", c.pa1_s2, "embezzle_exact_marginals")
    rep.add("pb1_t0", c.pb1_t0, "embezzle_exact_marginals")
    rep.add("outcome2_max", c.outcome2_max, "embezzle_tilted_block")
    rep.add("satwap_value", c.satwap_value, "embezzle_satwap_block")
    rep.add("satwap_block_distance", c.satwap_block_distance, "embezzle_satwap_block")
    rep.add("tilted_block_distance", c.tilted_block_distance, "embezzle_tilted_block")
    rep.add("tilted_block_error_bar", c.error_bar, "embezzle_tilted_block")
    rep.add("C_n", ident["C_n"], "embezzlement_error")
    rep.add("epsilon_norm_sq", ident["epsilon_norm_sq"], "embezzlement_error")
    rep.add("epsilon_bound_sq", ident["epsilon_bound_sq"], "embezzlement_error")
    rep.add("identity_residual", ident["residual"], "embezzlement_error")
    rep.add("schmidt", schmidt_report(n), "schmidt_structure")
    rep.add_table("p_n", c.p)


def _run_seesaw(cfg, rep):
    p = cfg.params
    f, dims, target = _functional(p["target"], p["param"])
    conf = SeesawConfig(dims=dims, restarts=p["restarts"], seed=p["seed"],
                        max_iters=p["max_iters"], threads=cfg.threads)
    res = seesaw_maximize(f, conf)
    rep.add("value", res.value, "seesaw_target")
    rep.add("target_value", target, "seesaw_target")
    rep.add("gap", target - res.value, "seesaw_target")
    rep.add("converged", res.converged, "diagnostic")
    rep.add("monotone", res.is_monotone(), "diagnostic")
    rep.add("restart_values", res.restart_values, "diagnostic")
    rep.add("restart_seeds", res.seeds, "diagnostic")


def _run_lhv(cfg, rep):
    target, param = cfg.params["target"], cfg.params["param"]
    f, _, _ = _functional(target, param)
    bound = lhv_max_bruteforce(f)
    rep.add("local_bound", bound.value, "lhv_bound")
    rep.add("alice_assignment", bound.alice, "lhv_bound")
    rep.add("bob_assignment", bound.bob, "lhv_bound")
    rep.add("strategies", bound.strategies, "diagnostic")
    if target == "chsh-tilted":
        rep.add("local_bound_formula", 2 + param, "tilted_local_bound")
        if param == 0:
            rep.add("chsh_local_bound", lhv_max_bruteforce(chsh_functional()).value, "lhv_bound")
    else:
        rep.add("local_bound_formula", float(formula_local_bound(int(param))),
                "satwap_local_bound_formula")


PIPELINES = {
    "chsh-tilted": _run_chsh_tilted,
    "satwap": _run_satwap,
    "selftest-extract": _run_selftest,
    "witness-qqs": _run_witness,
    "ternary-variant": _run_ternary,
    "embezzle": _run_embezzle,
    "seesaw": _run_seesaw,
    "lhv-bound": _run_lhv,
}


def dispatch(config):
    """Validate ``config`` and run exactly one pipeline."""
    validate(config)
    if config.command == "seesaw" and config.params["target"] == "satwap":
        config.params["param"] = int(config.params["param"])
    rep = Report(config.command, dict(config.params))
    rep.parameters["threads"] = config.threads
    PIPELINES[config.command](config, rep)
    return rep


def build_parser():
    parser = argparse.ArgumentParser(prog="bellkit", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (stdout if omitted)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--config", help="JSON file with default parameter values")
    common.add_argument("--threads", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("chsh-tilted", "canonical tilted CHSH value and local bound")
    p.add_argument("--beta", type=float)
    p = add("satwap", "canonical SATWAP value, local bound and certificate")
    p.add_argument("--d", type=int)
    p.add_argument("--certify", action="store_true", default=None)
    p = add("selftest-extract", "extract isometries from a hidden canonical strategy")
    p.add_argument("--d", type=int)
    p.add_argument("--junk", help="comma-separated junk Schmidt weights")
    p.add_argument("--seed", type=int)
    for name in ("witness-qqs", "ternary-variant"):
        p = add(name, "truncated two-copy tilted CHSH witness" if name == "witness-qqs"
                else "three-outcome variant of the witness")
        p.add_argument("--alpha", type=float)
        p.add_argument("--K", type=int)
    p = add("embezzle", "embezzlement correlation p_n")
    p.add_argument("--n", type=int)
    p = add("seesaw", "see-saw lower bound on the quantum value")
    p.add_argument("--target", choices=("chsh-tilted", "satwap"))
    p.add_argument("--param", type=float, help="beta for chsh-tilted, d for satwap")
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p = add("lhv-bound", "exact local bound by enumeration")
    p.add_argument("--target", choices=("chsh-tilted", "satwap"))
    p.add_argument("--param", type=float)
    return parser


def config_from_args(argv):
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    file_values = {}
    if args.get("config"):
        with open(args["config"], encoding="utf-8") as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise InvalidParameter("config", "must contain a JSON object")
    args.pop("config")
    merged = dict(DEFAULTS[command])
    merged.update({k: file_values[k] for k in ("out", "format", "threads") if k in file_values})
    merged.update({k: v for k, v in file_values.items() if k in DEFAULTS[command]})
    merged.update({k: v for k, v in args.items() if v is not None})
    unknown = set(file_values) - set(DEFAULTS[command]) - {"out", "format", "threads"}
    if unknown:
        raise InvalidParameter(sorted(unknown)[0], f"not a parameter of {command}")
    out, fmt = merged.pop("out", None), merged.pop("format", None) or "json"
    threads = merged.pop("threads", None)
    threads = resolve_threads(threads)
    return RunConfig(command, merged, out, fmt, threads)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
            raise UnknownCommand(f"unknown command {argv[0]!r}; choose from {', '.join(COMMANDS)}")
        config = config_from_args(argv)
        report = dispatch(config)
        text = emit(report, config.format, config.out)
        if config.out is None:
            sys.stdout.write(text)
        return 0
    except (BellkitError, OSError, ValueError) as exc:
        sys.stderr.write(json.dumps(error_payload(exc), sort_keys=True) + "\n")
        return 2 if isinstance(exc, (InvalidParameter, UnknownCommand)) else 1


if __name__ == "__main__":
    sys.exit(main())
