"""Command-line interface: measure, agsp, bootstrap, lowrank, corollary2,
sweep, selftest.

Configuration uses INI files with [model], [cut], [bootstrap], [agsp],
[output] and (for sweeps) [sweep] sections; every field can also be given
as a flag. Runs are deterministic for a fixed seed: table.csv is
byte-stable across repeats (wall times live in results.json only).

Exit codes: 0 success, 2 contract/witness failure, 3 resource limit,
4 config error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import matio
from .core import BipartiteCut, SubState, tensor, trace_norm
from .entropy import (
    imax_seesaw,
    mutual_info,
    von_neumann_entropy,
)
from .errors import ArealawError, ConfigError, ContractError, ResourceError
from .models import ChainModel, build_hamiltonian, ground_space
from .pipeline import (
    BootstrapConfig,
    WITNESS_STORE_DIM,
    bootstrap_run,
    corollary2_check,
    low_rank_approx,
)

ENV_OUTDIR = "AREALAW_OUTDIR"
ENV_WORKERS = "AREALAW_WORKERS"


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _load_config(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    return parser


def _model_from_args(args, config) -> ChainModel:
    sec = config["model"] if config and config.has_section("model") else {}
    kind = args.model or sec.get("kind")
    if not kind:
        raise ConfigError("no model specified ([model] kind or --model)")
    n = args.n or (int(sec.get("n", 0)) or None)
    if not n:
        raise ConfigError("no chain length specified ([model] n or --n)")
    field = args.field if args.field is not None else float(sec.get("h", 1.0))
    aniso = float(sec.get("delta_aniso", 1.0))
    terms = ()
    if kind == "custom":
        term_path = sec.get("term_file") if sec else None
        if term_path is None:
            raise ConfigError("custom model needs [model] term_file")
        terms = (matio.load_matrix(term_path),)
    try:
        return ChainModel(kind, n=n, h=field, delta_aniso=aniso, terms=terms)
    except ArealawError as exc:
        raise ConfigError(str(exc)) from exc


def _cut_from_args(args, config, n: int) -> BipartiteCut:
    sec = config["cut"] if config and config.has_section("cut") else {}
    n_left = args.cut or (int(sec.get("sites_left", 0)) or None)
    if not n_left:
        raise ConfigError("no cut specified ([cut] sites_left or --cut)")
    return BipartiteCut.chain(n, n_left)


def _bootstrap_config(args, config, cut) -> BootstrapConfig:
    sec = config["bootstrap"] if config and config.has_section("bootstrap") else {}
    agsp_sec = config["agsp"] if config and config.has_section("agsp") else {}
    eps = args.epsilon if args.epsilon is not None else float(sec.get("epsilon", 0.2))
    degree = sec.get("agsp_degree", "auto")
    return BootstrapConfig(
        epsilon=eps,
        cut=cut,
        agsp_degree=None if str(degree) == "auto" else int(degree),
        agsp_max_degree=int(agsp_sec.get("max_degree", sec.get("max_degree", 64))),
        d_b_resolution=int(sec.get("d_b_resolution", 2**16)),
        seed=args.seed if args.seed is not None else int(sec.get("seed", 0)),
        truncation_tol=float(agsp_sec.get("truncation_tol", 1e-10)),
    )


def _outdir(args, config) -> str:
    out = os.environ.get(ENV_OUTDIR)
    if args.out:
        out = args.out
    elif config and config.has_section("output") and not out:
        out = config["output"].get("directory", ".")
    out = out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_results(outdir, payload, witnesses=None):
    path = os.path.join(outdir, "results.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
    if witnesses:
        np.savez_compressed(os.path.join(outdir, "witnesses.npz"), **witnesses)
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj)}")


def _collect_witnesses(records, prefix="") -> tuple[dict, list]:
    """Flatten witness entries; stored triples use a self-contained naming
    scheme (<base>_rho / _tau_l / _tau_r / _factor) that selftest re-checks
    without consulting the manifest."""
    arrays, manifest = {}, []
    for rec in records:
        for i, w in enumerate(rec.witnesses):
            entry = {k: v for k, v in w.items() if k != "arrays"}
            if "arrays" in w:
                base = f"{prefix}k{rec.k}w{i}"
                for name, arr in w["arrays"].items():
                    arrays[f"{base}_{name}"] = arr
                arrays[f"{base}_factor"] = np.array(w["factor"])
                entry["stored"] = base
            manifest.append(entry)
    return arrays, manifest


def cmd_measure(args, config) -> int:
    model = _model_from_args(args, config)
    cut = _cut_from_args(args, config, model.n)
    h = build_hamiltonian(model)
    gs = ground_space(h)
    omega = gs.omega
    seed = args.seed if args.seed is not None else 0
    res = imax_seesaw(
        omega, cut,
        restarts=4 if cut.dim <= 16 else 0,
        inner_iters=200, max_outer=5, seed=seed,
    )
    payload = {
        "command": "measure",
        "model": model.kind,
        "n": model.n,
        "cut": len(cut.sites_l),
        "r": gs.r,
        "gamma": gs.gamma,
        "entropy_omega_bits": von_neumann_entropy(omega),
        "mutual_info_bits": mutual_info(omega, cut),
        "imax_upper": res.to_json_dict(),
    }
    outdir = _outdir(args, config)
    _write_results(outdir, payload)
    print(json.dumps(payload, indent=2, default=_json_default))
    return 0


def cmd_agsp(args, config) -> int:
    from .agsp import certify_agsp, chebyshev_agsp

    model = _model_from_args(args, config)
    cut = _cut_from_args(args, config, model.n)
    h = build_hamiltonian(model)
    gs = ground_space(h)
    degree = args.degree or 8
    a = chebyshev_agsp(h, gs.spectral_data, degree, cut, h_eig=gs.eig)
    cert = certify_agsp(a.k_op, gs.pi_gs, cut)
    payload = {
        "command": "agsp",
        "model": model.kind,
        "n": model.n,
        "constructed": a.to_json_dict(),
        "certified": cert.to_json_dict(),
    }
    outdir = _outdir(args, config)
    _write_results(outdir, payload)
    print(json.dumps(payload, indent=2, default=_json_default))
    return 0


def _bootstrap_payload(result, gs, model, cut):
    return {
        "model": model.kind,
        "n": model.n,
        "cut": len(cut.sites_l),
        "epsilon": result.epsilon,
        "r": gs.r,
        "gamma": gs.gamma,
        "halted_at": result.halted_at,
        "anomaly": result.anomaly,
        "smoothed_upper_bits": result.smoothed_bound.value,
        "smoothed_details": result.smoothed_bound.to_json_dict(),
        "smoothing_distance": result.smoothing_distance,
        "d_b": result.d_b,
        "agsp": result.agsp.to_json_dict(),
        "trace": [
            {
                "k": rec.k,
                "t_k": rec.t_k,
                "distance_to_omega": rec.distance_to_omega,
                "imax_upper_rho_prime": rec.imax_upper_rho_prime,
                "halted": rec.halted,
                "exact_factors": rec.exact_factors,
                "member_trace": rec.member_trace,
            }
            for rec in result.trace
        ],
    }


def cmd_bootstrap(args, config) -> int:
    model = _model_from_args(args, config)
    cut = _cut_from_args(args, config, model.n)
    cfg = _bootstrap_config(args, config, cut)
    h = build_hamiltonian(model)
    gs = ground_space(h)
    t0 = time.time()
    result = bootstrap_run(gs, cfg)
    payload = _bootstrap_payload(result, gs, model, cut)
    payload["command"] = "bootstrap"
    payload["wall_time_s"] = time.time() - t0
    arrays, manifest = _collect_witnesses(result.trace)
    payload["witnesses"] = manifest
    outdir = _outdir(args, config)
    _write_results(outdir, payload, witnesses=arrays)
    print(json.dumps({k: payload[k] for k in (
        "model", "n", "epsilon", "halted_at", "smoothed_upper_bits",
        "smoothing_distance")}, indent=2, default=_json_default))
    return 2 if result.anomaly else 0


def cmd_lowrank(args, config) -> int:
    model = _model_from_args(args, config)
    cut = _cut_from_args(args, config, model.n)
    cfg = _bootstrap_config(args, config, cut)
    h = build_hamiltonian(model)
    gs = ground_space(h)
    t0 = time.time()
    result = low_rank_approx(gs, cfg)
    payload = {
        "command": "lowrank",
        "model": model.kind,
        "n": model.n,
        "epsilon": cfg.epsilon,
        "schmidt_rank": result.schmidt_rank,
        "rank_bound": result.rank_bound,
        "distance": result.distance,
        "audit_chain": list(result.certified_factor_chain),
        "wall_time_s": time.time() - t0,
    }
    outdir = _outdir(args, config)
    _write_results(outdir, payload)
    print(json.dumps({k: payload[k] for k in (
        "model", "n", "epsilon", "schmidt_rank", "rank_bound", "distance")},
        indent=2, default=_json_default))
    return 0


def cmd_corollary2(args, config) -> int:
    model = _model_from_args(args, config)
    cut = _cut_from_args(args, config, model.n)
    h = build_hamiltonian(model)
    gs = ground_space(h)
    result = corollary2_check(gs, cut)
    payload = {
        "command": "corollary2",
        "model": model.kind,
        "n": model.n,
        "epsilon": result.epsilon,
        "i_omega": result.i_omega,
        "smoothed_upper": result.smoothed_upper,
        "rhs_chain": result.rhs_chain,
        "holds": result.i_omega <= result.rhs_chain,
    }
    outdir = _outdir(args, config)
    _write_results(outdir, payload)
    print(json.dumps(payload, indent=2, default=_json_default))
    return 0


def sweep_point(spec) -> dict:
    """One sweep cell: build, diagonalize, bound, optionally compress."""
    kind, n, n_left, eps, seed, lowrank, field = spec
    t0 = time.time()
    model = ChainModel(kind, n=n, h=field)
    h = build_hamiltonian(model)
    gs = ground_space(h)
    cut = BipartiteCut.chain(n, n_left)
    cfg = BootstrapConfig(epsilon=eps, cut=cut, seed=seed)
    boot = bootstrap_run(gs, cfg)
    i_omega = mutual_info(gs.omega, cut)
    imax_res = imax_seesaw(
        gs.omega, cut,
        restarts=4 if cut.dim <= 16 else 0,
        inner_iters=200, max_outer=5, seed=seed,
    )
    row = {
        "model": kind,
        "n": n,
        "L": n_left,
        "epsilon": eps,
        "r": gs.r,
        "gamma": gs.gamma,
        "i_omega": i_omega,
        "imax_upper": imax_res.value,
        "smoothed_upper": boot.smoothed_bound.value,
        "halt_k": -1 if boot.halted_at is None else boot.halted_at,
        "smoothing_distance": boot.smoothing_distance,
        "lowrank_sr": "",
        "lowrank_distance": "",
    }
    details = _bootstrap_payload(boot, gs, model, cut)
    if lowrank:
        lr = low_rank_approx(gs, cfg)
        row["lowrank_sr"] = lr.schmidt_rank
        row["lowrank_distance"] = lr.distance
        details["lowrank"] = {
            "schmidt_rank": lr.schmidt_rank,
            "rank_bound": lr.rank_bound,
            "distance": lr.distance,
        }
    details["wall_time_s"] = time.time() - t0
    arrays, manifest = _collect_witnesses(boot.trace)
    details["witnesses"] = manifest
    return {"row": row, "details": details, "arrays": arrays}


TABLE_COLUMNS = [
    "model", "n", "L", "epsilon", "r", "gamma", "i_omega", "imax_upper",
    "smoothed_upper", "halt_k", "smoothing_distance", "lowrank_sr",
    "lowrank_distance",
]


def cmd_sweep(args, config) -> int:
    if not config or not config.has_section("sweep"):
        raise ConfigError("sweep requires a config file with a [sweep] section")
    sec = config["sweep"]
    models = [m.strip() for m in sec.get("models", "").split(",") if m.strip()]
    if not models:
        raise ConfigError("[sweep] models is empty")
    n_values = [int(x) for x in sec.get("n", "").split(",") if x.strip()]
    if not n_values:
        raise ConfigError("[sweep] n is empty")
    fraction = float(sec.get("cut_fraction", 0.5))
    epsilons = [float(x) for x in sec.get("epsilon", "0.2").split(",") if x.strip()]
    seed = int(sec.get("seed", 0))
    lowrank = sec.getboolean("lowrank", fallback=False)
    field = float(sec.get("h", 1.0))

    specs = []
    for kind in models:
        for n in n_values:
            n_left = max(1, int(round(n * fraction)))
            for eps in epsilons:
                specs.append((kind, n, n_left, eps, seed, lowrank, field))

    workers = int(os.environ.get(ENV_WORKERS, "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(sweep_point, specs))
    else:
        results = [sweep_point(s) for s in specs]

    outdir = _outdir(args, config)
    table_path = os.path.join(outdir, "table.csv")
    with open(table_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for res in results:
            writer.writerow([_fmt(res["row"][c]) for c in TABLE_COLUMNS])
    plot_path = os.path.join(outdir, "plotdata.csv")
    with open(plot_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "n", "log2_L", "i_omega", "smoothed_upper"])
        for res in results:
            row = res["row"]
            writer.writerow(
                [row["model"], row["n"], _fmt(float(np.log2(row["L"]))),
                 _fmt(row["i_omega"]), _fmt(row["smoothed_upper"])]
            )
    arrays = {}
    for i, res in enumerate(results):
        for key, arr in res["arrays"].items():
            arrays[f"p{i}_{key}"] = arr
    payload = {
        "command": "sweep",
        "seed": seed,
        "points": [r["details"] for r in results],
    }
    _write_results(outdir, payload, witnesses=arrays or None)
    print(f"wrote {table_path}, {plot_path}")
    return 0


def cmd_selftest(args, config) -> int:
    from .core import DensityOperator, gentle_measure, support_projector
    from .constructions import dominate_mixture, dominate_vec, short_distance_bound
    from .entropy import certified_dmax_bits, dmax, dmin

    rng = np.random.default_rng(20240817)
    checks = []

    def random_density(dim, rank=None):
        rank = dim if rank is None else rank
        g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
        m = g @ g.conj().T
        return DensityOperator(m / np.real(np.trace(m)))

    # flat identities
    ok = True
    for _ in range(25):
        g = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        q, _ = np.linalg.qr(g)
        rho = DensityOperator(q[:, :2] @ q[:, :2].conj().T / 2)
        sig = DensityOperator(q @ q.conj().T / 8)
        ok &= abs(dmax(rho, sig) - 2.0) < 1e-9 and abs(dmin(rho, sig) - 2.0) < 1e-9
    checks.append(("flat-state identities", ok))

    # gentle measurement
    ok = True
    for _ in range(50):
        rho = random_density(3)
        g = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        q, _ = np.linalg.qr(g)
        out, bound = gentle_measure(rho, q @ q.conj().T)
        ok &= trace_norm(rho.mat - out.mat) <= bound + 1e-9
    checks.append(("gentle measurement bound", ok))

    # Bhatia perturbation
    ok = True
    for _ in range(50):
        a, b = random_density(5), random_density(5)
        ea = np.sort(np.linalg.eigvalsh(a.mat))[::-1]
        eb = np.sort(np.linalg.eigvalsh(b.mat))[::-1]
        ok &= np.sum(np.abs(ea - eb)) <= trace_norm(a.mat - b.mat) + 1e-9
    checks.append(("eigenvalue perturbation bound", ok))

    # domination witnesses
    ok = True
    for _ in range(25):
        terms = [
            (0.5, random_density(2), random_density(2)),
            (0.5, random_density(2), random_density(2)),
        ]
        ok &= dominate_mixture(terms).lambda_min_witness >= -1e-9
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        res = dominate_vec(g / np.linalg.norm(g), BipartiteCut(2, 2))
        ok &= res.lambda_min_witness >= -1e-9
    checks.append(("domination witnesses", ok))

    # short distance
    ok = True
    for _ in range(25):
        sig = random_density(3)
        delta = 0.2
        rho = SubState((1 - delta) * sig.mat)
        ok &= trace_norm(rho.mat - sig.mat) <= short_distance_bound(
            rho, sig, delta
        ) + 1e-9
    checks.append(("short-distance bound", ok))

    # stored witnesses of the last run, when present
    outdir = _outdir(args, config)
    npz_path = os.path.join(outdir, "witnesses.npz")
    if os.path.exists(npz_path):
        store = np.load(npz_path)
        ok = True
        count = 0
        for key in store.files:
            if not key.endswith("_rho"):
                continue
            base = key[: -len("_rho")]
            try:
                rho = store[key]
                tl = store[base + "_tau_l"]
                tr_ = store[base + "_tau_r"]
                factor = float(store[base + "_factor"])
            except KeyError:
                ok = False
                continue
            lam = float(np.linalg.eigvalsh(factor * np.kron(tl, tr_) - rho)[0])
            ok &= lam >= -1e-8 * max(1.0, factor)
            count += 1
        checks.append((f"stored witnesses re-checked ({count})", ok))

    failed = [name for name, good in checks if not good]
    for name, good in checks:
        print(f"[{'PASS' if good else 'FAIL'}] {name}")
    return 2 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arealaw",
        description="Certified mutual-information bounds for maximally "
        "mixed ground states of gapped 1D chains",
    )
    parser.add_argument("--config", help="INI config file")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("measure", "agsp", "bootstrap", "lowrank", "corollary2",
                 "sweep", "selftest"):
        p = sub.add_parser(name)
        p.add_argument("--model", help="model kind")
        p.add_argument("--n", type=int, help="chain length")
        p.add_argument("--cut", type=int, help="sites in L")
        p.add_argument("--epsilon", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--degree", type=int, help="AGSP degree")
        p.add_argument("--field", type=float, help="transverse field h")
        p.add_argument("--out", help="output directory")
    return parser


COMMANDS = {
    "measure": cmd_measure,
    "agsp": cmd_agsp,
    "bootstrap": cmd_bootstrap,
    "lowrank": cmd_lowrank,
    "corollary2": cmd_corollary2,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = None
    try:
        if args.config:
            config = _load_config(args.config)
        return COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except (configparser.Error, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except ArealawError as exc:
        print(f"contract failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
