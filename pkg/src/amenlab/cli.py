"""Command-line front end: defect tables, LP mean search and the derivation pipeline.

Exit codes: 0 success, 1 a pipeline stage failed or missed its threshold,
2 configuration error, 3 window/depth overflow, 4 size limit exceeded.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .io import ConfigError, load_config, stamp, write_csv, write_json

log = logging.getLogger("amenlab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_WINDOW, EXIT_SIZE = 0, 1, 2, 3, 4


class StageError(RuntimeError):
    def __init__(self, stage, message):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


def _group_space(cfg, default_space="point"):
    from .groups import GroupDescriptor, GroupError, space_from_doc
    try:
        G = GroupDescriptor.from_doc(cfg["group"])
        space = space_from_doc(G, cfg.get("space", {"type": default_space}))
    except (GroupError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad group or space: {exc}") from exc
    return G, space


def _generators(cfg, G):
    from .groups import GroupError
    if "generators" not in cfg:
        return list(G.generators)
    try:
        return [G.element(G.parse_word(w)) for w in cfg["generators"]]
    except (GroupError, KeyError, ValueError) as exc:
        raise ConfigError(f"bad generator: {exc}") from exc


def _n_values(spec):
    if isinstance(spec, dict):
        if spec["stop"] < spec["start"]:
            raise ConfigError("n range is empty")
        return list(range(spec["start"], spec["stop"] + 1))
    return list(spec)


# ---------------------------------------------------------------------------
# commands


def cmd_defect(cfg, out, seed, config_hash):
    from .groups import GroupError
    from .means import boundary_prefix_mean, defect, folner_mean
    G, space = _group_space(cfg, "boundary" if cfg.get("mean", {}).get("kind") == "prefix" else "point")
    gens = _generators(cfg, G)
    kind = cfg.get("mean", {"kind": "folner"})["kind"]
    if kind not in ("folner", "prefix", "uniform"):
        raise ConfigError(f"mean kind {kind!r} is not available for defect tables")
    if "n" not in cfg:
        raise ConfigError("defect tables need an 'n' range")
    if kind == "prefix":
        if not space.is_cylinder or G.kind != "free":
            raise ConfigError("prefix means live on the boundary of a free group")
        if any(g.length != 1 for g in gens):
            raise ConfigError("prefix-mean defects are evaluated at single letters")
    rows, per_n = [], []
    for n in _n_values(cfg["n"]):
        t0 = time.perf_counter()
        if kind == "prefix":
            m = boundary_prefix_mean(G.rank, n)
        else:
            try:
                m = folner_mean(G, n, space)
            except GroupError as exc:
                raise ConfigError(str(exc)) from exc
        rep = defect(m, gens)
        log.info("n=%d defect=%.6g (%.3fs)", n, rep.total, time.perf_counter() - t0)
        for g in gens:
            rows.append((n, str(g), rep.per_generator[str(g)]))
        per_n.append((n, rep.total))
    threshold = cfg.get("threshold")
    totals = [d for _, d in per_n]
    decreasing = all(b <= a for a, b in zip(totals, totals[1:]))
    label = "amenability evidence" if threshold is not None and decreasing and totals[-1] < threshold else "no evidence"
    cert = {
        "command": "defect",
        "group": G.to_doc(),
        "space": space.to_doc(),
        "mean": kind,
        "generators": [str(g) for g in gens],
        "defects": [{"n": n, "max_defect": d} for n, d in per_n],
        "final_defect": totals[-1],
        "threshold": threshold,
        "label": label,
    }
    write_csv(out / "defect.csv", ["n", "generator", "defect"], rows)
    write_json(out / "certificate.json", stamp(cert, config_hash, seed))
    return EXIT_OK


def cmd_lp_search(cfg, out, seed, config_hash, tolerance):
    from .groups import ball
    from .means import lp_optimal_mean
    G, space = _group_space(cfg)
    gens = _generators(cfg, G)
    if "window" not in cfg:
        raise ConfigError("lp-search needs a window radius")
    window = ball(G, cfg["window"]["radius"])
    res = lp_optimal_mean(space, window, gens, depth=cfg.get("depth", 0), exact=cfg.get("exact", False),
                          max_variables=cfg.get("max_variables", 20000), rule=cfg.get("rule", "bland"))
    recomputed = res.report.total
    agree = abs(recomputed - res.optimum) <= max(1e-8, tolerance)
    cert = {
        "command": "lp-search",
        "group": G.to_doc(),
        "space": space.to_doc(),
        "window": [str(g) for g in res.mean.window],
        "depth": res.mean.depth,
        "weights": res.mean.weights,
        "lp_optimum": res.optimum,
        "exact_optimum": res.exact_optimum,
        "defect": recomputed,
        "per_generator": res.report.per_generator,
        "agree": agree,
        "lp_iterations": res.lp_iterations,
        "n_variables": res.n_variables,
        "n_constraints": res.n_constraints,
    }
    write_json(out / "certificate.json", stamp(cert, config_hash, seed))
    return EXIT_OK if agree else EXIT_FAIL


def _build_mean(cfg, G, space):
    from .algebra import A0Element
    from .groups import FINITE
    from .means import PrefixMean
    spec = cfg.get("mean", {"kind": "uniform"})
    kind = spec["kind"]
    if kind == "uniform":
        if G.kind != FINITE:
            raise ConfigError("uniform means need a finite group")
        N = space.size(0)
        return A0Element(space, {g: np.full(N, 1.0 / G.order) for g in G.elements()}, 0)
    if kind == "prefix":
        if not space.is_cylinder:
            raise ConfigError("prefix means need the boundary space")
        return PrefixMean(G.rank, spec.get("n", 8)).as_a0()
    if kind == "weights":
        try:
            w = {G.element(G.parse_word(k)): v for k, v in spec["weights"].items()}
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad mean weights: {exc}") from exc
        if abs(sum(w.values()) - 1.0) > 1e-12 or min(w.values()) < 0:
            raise ConfigError("mean weights must be nonnegative and sum to 1")
        return A0Element.from_constants(space, w)
    raise ConfigError(f"mean kind {kind!r} is not available for the pipeline")


def _build_module(cfg, space, seed):
    from .derivations import BimoduleSpec, boundary_z_bimodule, product_bimodule
    spec = cfg.get("module", {"kind": "product"})
    try:
        if spec["kind"] == "product":
            return product_bimodule(space, spec.get("blocks", 1), rng=seed)
        if spec["kind"] == "boundary-z":
            M = boundary_z_bimodule(spec.get("period", 3))
            if M.group != space.group:
                raise ConfigError("the boundary-z module needs the rank-one free group on its boundary")
            return M
        return BimoduleSpec.from_doc(space, spec["doc"])
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed module document: {exc}") from exc


def cmd_pipeline(cfg, out, seed, config_hash):
    from .derivations import (DerivationSpec, cx_centrality_defect, derivation_defect, geometric_defect,
                              random_inner_derivation, reduce_to_cx_equivariant, solve_inner_via_mean)
    from .groups import FINITE
    G, space = _group_space(cfg, "regular")
    M = _build_module(cfg, space, seed)
    mean = _build_mean(cfg, G, M.space)
    report = {"command": "pipeline", "group": G.to_doc(), "space": M.space.to_doc(), "stages": {}}
    stages = report["stages"]
    check = M.validate()
    if not check.ok(1e-9):
        raise StageError("module", f"bimodule axioms fail: {check}")
    geo = geometric_defect(M, "right", "l1", seed=seed)
    stages["gate"] = {"right_l1_geometric_defect": geo.defect, "exhaustive": geo.exhaustive}
    if geo.defect > 0:
        raise StageError("gate", "module is not right l1-geometric on the sampled suite")
    E = M.dual()
    dspec = cfg.get("derivation", {"kind": "inner"})
    try:
        D = random_inner_derivation(E, seed) if dspec["kind"] == "inner" else DerivationSpec.from_doc(E, dspec["doc"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed derivation document: {exc}") from exc
    leib = derivation_defect(D, seed=seed)
    stages["derivation"] = {"leibniz_defect": leib.defect, "unit_defect": leib.unit_defect}
    try:
        red = reduce_to_cx_equivariant(D)
    except ValueError as exc:
        raise StageError("reduce", str(exc)) from exc
    stages["reduce"] = {"tau0_residual": red.residual, "equivariance_defect": red.equivariance_defect}
    try:
        sol = solve_inner_via_mean(red.derivation, mean)
    except ValueError as exc:
        raise StageError("solve", str(exc)) from exc
    stages["solve"] = {"residual": sol.residual, "mean_defect": sol.mean_defect, "C": sol.C, "bound": sol.bound,
                       "fixed_point_residual": sol.fixed_point_residual}
    cent = cx_centrality_defect(red.derivation)
    stages["centrality"] = {"defect": cent.defect, "K": cent.K, "bound": cent.bound}
    limit = cfg.get("residual_threshold", "bound")
    ok = (sol.residual <= (sol.bound + 1e-8 if limit == "bound" else limit)) and cent.holds
    if G.kind == FINITE and not M.space.is_cylinder:
        from .groupoid import MeasuredAction, expectation_via_mean, positivize
        ma = MeasuredAction.uniform(M.space)
        try:
            ex = expectation_via_mean(ma, mean)
        except ValueError as exc:
            raise StageError("expectation", str(exc)) from exc
        P = ex.expectation
        N = M.space.size(0)
        weights = np.array([[P.matrix[x, i * N + x] for x in range(N)] for i in range(len(P.window))])
        pos = positivize(M.space, P.window, weights, cfg.get("expectation", {}).get("eps", 1e-9))
        stages["expectation"] = {
            "equivariance": ex.report.equivariance, "unitality": ex.report.unitality,
            "linearity": ex.report.linearity, "annihilation": ex.annihilation,
            "pipeline_residual": ex.pipeline_residual, "op_norm": P.op_norm,
        }
        stages["positivize"] = {
            "input_residual": pos.input_residual, "output_residual": pos.output_residual,
            "abs_term": pos.abs_term, "eta_term": pos.eta_term, "min_weight": float(pos.weights.min()),
            "unit_defect": float(np.max(np.abs(pos.weights.sum(axis=0) - 1.0))),
        }
        eq_limit = ex.pipeline_residual + 1e-8
        ok = ok and ex.report.unitality <= 1e-8 and ex.report.equivariance <= eq_limit and pos.holds
    report["ok"] = bool(ok)
    write_json(out / "report.json", stamp(report, config_hash, seed))
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    p = argparse.ArgumentParser(prog="amenlab", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=["defect", "lp-search", "pipeline"],
                   help="command to run (defaults to the one named in the config)")
    p.add_argument("--config", required=True, type=Path, help="YAML run configuration")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, help="worker threads for compiled kernels")
    p.add_argument("--tolerance", type=float, help="override the config tolerance")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    from .means import SizeLimitExceeded, WindowOverflow
    from .groups import DepthError
    try:
        cfg, config_hash = load_config(args.config)
        command = args.command or cfg["command"]
        if args.command and args.command != cfg["command"]:
            raise ConfigError(f"command {args.command!r} does not match config command {cfg['command']!r}")
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        tolerance = args.tolerance if args.tolerance is not None else cfg.get("tolerance", 1e-9)
        if tolerance <= 0:
            raise ConfigError("tolerance must be positive")
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("threads must be >= 1")
            import numba
            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        args.out.mkdir(parents=True, exist_ok=True)
        if command == "defect":
            return cmd_defect(cfg, args.out, seed, config_hash)
        if command == "lp-search":
            return cmd_lp_search(cfg, args.out, seed, config_hash, tolerance)
        return cmd_pipeline(cfg, args.out, seed, config_hash)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WindowOverflow, DepthError) as exc:
        print(f"window overflow: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except SizeLimitExceeded as exc:
        print(f"size limit exceeded: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except StageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
