"""Command-line experiment runner with deterministic JSON/CSV reports.

Every command resolves its parameters from built-in defaults, overridden by
an optional JSON config file (unknown keys rejected), overridden by the
``--seed`` flag. The resolved config is echoed into every report, reports
carry no timestamps, and float formatting is fixed, so rerunning a command
with the same config and seed reproduces the report files byte for byte.
Exit status is 0 exactly when every check the command ran passed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import bench, embio, worlds
from .contrastive import (
    ContrastiveBatch,
    TrainerConfig,
    exact_gradients,
    loss_bound_check,
    stable_region_threshold,
    train_contrastive,
)
from .linalg import EmbeddingMatrix, PairedEmbeddings, l2_normalize_rows, spectral_summary
from .geometry import group_pairs, group_statistics, masked_gap_distance

RANK_GAMMA = 1.0 - 1e-9


# ---------------------------------------------------------------------------
# report plumbing

def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-report-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    return v


def write_reports(out_dir, command, config, results, checks, tables, fmt="both"):
    """Emit <command>.json and per-table CSVs under ``out_dir``; return pass flag."""
    os.makedirs(out_dir, exist_ok=True)
    passed = all(checks.values()) if checks else True
    if fmt in ("json", "both"):
        doc = {
            "command": command,
            "config": _jsonable(config),
            "results": _jsonable(results),
            "checks": _jsonable(checks),
            "passed": passed,
        }
        _atomic_write_text(
            os.path.join(out_dir, f"{command}.json"),
            json.dumps(doc, sort_keys=True, indent=2) + "\n",
        )
    if fmt in ("csv", "both"):
        prefix = [f"# command={command}"]
        prefix += [f"# {k}={_cell(v)}" for k, v in sorted(config.items())]
        for name, header, rows in tables:
            lines = list(prefix)
            lines.append(",".join(header))
            lines += [",".join(_cell(v) for v in row) for row in rows]
            _atomic_write_text(
                os.path.join(out_dir, f"{command}.{name}.csv"), "\n".join(lines) + "\n"
            )
    return passed


# ---------------------------------------------------------------------------
# shared helpers

def _random_unit_batch(rng: np.random.Generator, n: int, d: int, tau: float) -> ContrastiveBatch:
    x = l2_normalize_rows(rng.standard_normal((n, d)))
    y = l2_normalize_rows(rng.standard_normal((n, d)))
    return ContrastiveBatch(PairedEmbeddings(x=x, y=y), tau=tau)


def finite_difference_gradients(batch: ContrastiveBatch, h: float = 1e-5):
    """Central-difference gradients of the contrastive loss, entry by entry."""
    x0 = batch.pairs.x.values
    y0 = batch.pairs.y.values

    def loss_of(x, y):
        z = x @ y.T / batch.tau
        m1 = z.max(axis=1)
        m0 = z.max(axis=0)
        lse_r = m1 + np.log(np.exp(z - m1[:, None]).sum(axis=1))
        lse_c = m0 + np.log(np.exp(z - m0[None, :]).sum(axis=0))
        return float(-(2.0 * np.diag(z) - lse_r - lse_c).sum() / (2.0 * x.shape[0]))

    grads = []
    for base in (x0, y0):
        g = np.zeros_like(base)
        for i in range(base.shape[0]):
            for j in range(base.shape[1]):
                plus = base.copy()
                minus = base.copy()
                plus[i, j] += h
                minus[i, j] -= h
                if base is x0:
                    g[i, j] = (loss_of(plus, y0) - loss_of(minus, y0)) / (2 * h)
                else:
                    g[i, j] = (loss_of(x0, plus) - loss_of(x0, minus)) / (2 * h)
        grads.append(g)
    return grads[0], grads[1]


def _max_rel_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """Largest entry error relative to the gradient's largest-magnitude entry.

    Truncation error of central differences is absolute-scale, so comparing
    tiny entries against themselves only measures the difference scheme;
    scale-relative error is what the analytic gradient can be held to.
    """
    scale = max(float(np.abs(exact).max()), 1e-12)
    return float(np.abs(approx - exact).max() / scale)


# ---------------------------------------------------------------------------
# commands

def _cmd_simulate_init(p):
    w = worlds.make_collapsed_init_world(p["n"], p["d"], p["dex"], p["dey"], p["seed"])
    full = masked_gap_distance(w.pairs, np.arange(p["d"]))
    masked = masked_gap_distance(w.pairs, w.shared_ineffective)
    from .linalg import covariance

    sx = spectral_summary(covariance(w.pre_norm_x), RANK_GAMMA)
    sy = spectral_summary(covariance(w.pre_norm_y), RANK_GAMMA)
    sx_g = spectral_summary(covariance(w.pre_norm_x), p["gamma"])
    sy_g = spectral_summary(covariance(w.pre_norm_y), p["gamma"])
    results = {
        "full_gap": full,
        "masked_gap": masked,
        "effective_dim_x_rank": sx.effective_dim,
        "effective_dim_y_rank": sy.effective_dim,
        "effective_dim_x_gamma": sx_g.effective_dim,
        "effective_dim_y_gamma": sy_g.effective_dim,
    }
    checks = {
        "full_gap_near_1.21": abs(full - 1.21) <= 0.1,
        "masked_gap_near_0.99": abs(masked - 0.99) <= 0.1,
        "rank_dims_exact": sx.effective_dim == p["dex"] and sy.effective_dim == p["dey"],
    }
    var_rows = [
        (
            i,
            w.pre_norm_x[:, i].var(),
            w.pre_norm_y[:, i].var(),
            w.pairs.x.values[:, i].var(),
            w.pairs.y.values[:, i].var(),
        )
        for i in range(p["d"])
    ]
    tables = [
        (
            "variance",
            ["dim", "var_x_prenorm", "var_y_prenorm", "var_x", "var_y"],
            var_rows,
        )
    ]
    return results, checks, tables


def _cmd_train_sim(p, long_running=False):
    if long_running:
        p = dict(p, n=1000, steps=200000, renormalize_each_step=True,
                 gradient_form="exact", init="unit")
    w = worlds.make_collapsed_init_world(p["n"], p["d"], p["dex"], p["dey"], p["seed"])
    if p["init"] == "unit":
        init = w.pairs
    elif p["init"] == "prenorm":
        init = PairedEmbeddings(x=EmbeddingMatrix(w.pre_norm_x), y=EmbeddingMatrix(w.pre_norm_y))
    else:
        raise ValueError(f"unknown init {p['init']!r}")
    cfg = TrainerConfig(
        learning_rate=p["learning_rate"],
        steps=p["steps"],
        renormalize_each_step=p["renormalize_each_step"],
        record_every=p["record_every"],
        seed=p["seed"],
        gradient_form=p["gradient_form"],
    )
    res = train_contrastive(init, p["tau"], cfg, masked_dims=w.shared_ineffective)
    traj = res.trajectory
    losses = [r.loss for r in traj]
    results = {
        "initial_loss": losses[0],
        "final_loss": losses[-1],
        "initial_gap_masked": traj[0].gap_masked,
        "final_gap_masked": traj[-1].gap_masked,
        "final_gap_full": traj[-1].gap_full,
        "max_masked_grad": max(r.masked_grad_max for r in traj),
        "checkpoints": len(traj),
    }
    checks = {
        "loss_finite": all(math.isfinite(v) for v in losses),
        "loss_decreased": losses[-1] < losses[0],
    }
    if long_running:
        checks["masked_gap_near_0.82"] = abs(traj[-1].gap_masked - 0.82) <= 0.1
    else:
        checks["masked_grad_exactly_zero"] = results["max_masked_grad"] == 0.0
        checks["final_loss_below_0.01"] = losses[-1] < 0.01
        checks["masked_gap_in_band"] = 0.7 <= traj[-1].gap_masked <= 1.1
    rows = [
        (r.step, r.loss, r.gap_full, r.gap_masked, r.masked_grad_max) for r in traj
    ]
    tables = [("trajectory", ["step", "loss", "gap_full", "gap_masked", "masked_grad_max"], rows)]
    return results, checks, tables


def _cmd_verify_gradients(p):
    rng = np.random.default_rng(p["seed"])
    taus = p["taus"]
    worst = {tau: 0.0 for tau in taus}
    rows = []
    for b in range(p["batches"]):
        tau = taus[b % len(taus)]
        n = int(rng.integers(2, p["max_n"] + 1))
        d = int(rng.integers(2, p["max_d"] + 1))
        batch = _random_unit_batch(rng, n, d, tau)
        exact = exact_gradients(batch)
        fd_x, fd_y = finite_difference_gradients(batch, p["h"])
        err = max(_max_rel_error(fd_x, exact.grad_x), _max_rel_error(fd_y, exact.grad_y))
        worst[tau] = max(worst[tau], err)
        rows.append((b, tau, n, d, err))
    overall = max(worst.values())
    results = {"max_rel_error": overall,
               "per_tau": {repr(t): worst[t] for t in taus}}
    checks = {"max_rel_error_below_1e-5": overall < 1e-5}
    tables = [("errors", ["batch", "tau", "n", "d", "max_rel_error"], rows)]
    return results, checks, tables


def _cmd_stable_region(p):
    rng = np.random.default_rng(p["seed"])
    taus = p["taus"]
    delta = p["delta"]
    rows = []
    violations = 0
    mono_failures = 0
    done = 0
    while done < p["instances"]:
        batch_by_tau = {}
        seed_x = rng.standard_normal((p["n"], p["d"]))
        seed_y = rng.standard_normal((p["n"], p["d"]))
        x = l2_normalize_rows(seed_x)
        y = l2_normalize_rows(seed_y)
        for tau in taus:
            batch_by_tau[tau] = ContrastiveBatch(PairedEmbeddings(x=x, y=y), tau=tau)
        for i in range(p["n"]):
            if done >= p["instances"]:
                break
            sims = x.values[i] @ y.values.T
            negatives = np.delete(sims, i)
            thresholds = []
            for tau in taus:
                rep = loss_bound_check(batch_by_tau[tau], i, delta)
                thr = stable_region_threshold(negatives, tau, delta)
                thresholds.append(thr)
                if rep.loss_i > rep.bound:
                    violations += 1
                rows.append((done, tau, rep.margin, rep.crowding, thr,
                             rep.loss_i, rep.bound, rep.in_stable_region))
            if any(b < a for a, b in zip(thresholds, thresholds[1:])):
                mono_failures += 1
            done += 1
    results = {"instances": done, "bound_violations": violations,
               "threshold_monotonicity_failures": mono_failures}
    checks = {"no_bound_violations": violations == 0,
              "threshold_monotone_in_tau": mono_failures == 0}
    tables = [("instances",
               ["instance", "tau", "margin", "crowding", "threshold", "loss_i", "bound", "in_stable_region"],
               rows)]
    return results, checks, tables


def _cmd_mlp_collapse(p):
    rows = []
    eff = {}
    cone = {}
    for s in range(p["seeds"]):
        cfg = worlds.MlpSimConfig(
            depth=p["depth"], width=p["width"], n_inputs=p["n_inputs"],
            probe_stride=p["probe_stride"], seed=p["seed"] + s, gamma=p["gamma"],
        )
        for probe in worlds.mlp_collapse_sim(cfg):
            rows.append((p["seed"] + s, probe.layer, probe.effective_dim,
                         probe.cone_mean, probe.cone_std, probe.dead))
            eff.setdefault(probe.layer, []).append(probe.effective_dim)
            cone.setdefault(probe.layer, []).append(probe.cone_mean)
    layers = sorted(eff)
    post = [l for l in layers if l > 0]
    eff_means = {l: float(np.mean(eff[l])) for l in layers}
    cone_means = {l: float(np.mean(cone[l])) for l in layers}
    eff_seq = [eff_means[l] for l in post]
    cone_seq = [cone_means[l] for l in post]
    results = {"effective_dim_mean": {str(l): eff_means[l] for l in layers},
               "cone_mean": {str(l): cone_means[l] for l in layers}}
    checks = {
        "effective_dim_non_increasing": all(b <= a for a, b in zip(eff_seq, eff_seq[1:])),
        "cone_strictly_increasing": all(b > a for a, b in zip(cone_seq, cone_seq[1:])),
        "cone_positive": all(c > 0 for c in cone_seq),
    }
    tables = [("probes", ["seed", "layer", "effective_dim", "cone_mean", "cone_std", "dead"], rows)]
    return results, checks, tables


def _cmd_gap_stats(p):
    synthetic = not p["x_file"]
    if synthetic:
        w = worlds.make_gap_world(p["n"], p["d"], p["span_dim"], p["gap_norm"],
                                  p["sigma"], p["seed"], p["noise_mode"])
        pairs = w.pairs
    else:
        x = embio.ingest(p["x_file"], p["file_format"])
        y = embio.ingest(p["y_file"], p["file_format"])
        pairs = PairedEmbeddings(x=x, y=y)
    groups = group_pairs(pairs, p["group_size"], p["seed"])
    rep = group_statistics(groups, p["pairs_per_group"], p["seed"])
    results = {name: {"mean": mean, "std": std} for name, mean, std in rep.rows()}
    results["n_groups"] = rep.n_groups
    results["skipped_zero_pairs"] = rep.skipped_zero_pairs
    checks = {}
    if synthetic:
        checks = {
            "gap_length_matches": abs(rep.gap_length[0] - p["gap_norm"]) <= 0.02,
            "gap_direction_constant": rep.gap_direction[0] >= 0.98,
            "gap_orthogonal": abs(rep.gap_orthogonality[0]) <= 0.02,
            "noise_mean_zero": abs(rep.noise_mean[0]) <= 1e-3,
            "noise_direction_random": abs(rep.noise_direction[0]) <= 0.03,
        }
    tables = [("statistics", ["statistic", "mean", "std"], rep.rows())]
    return results, checks, tables


def _cmd_c3_bench(p):
    task_kwargs = dict(
        n=p["n"], d=p["d"], latent=bench.LatentSpec("classification", p["classes"]),
        gap_norm=p["gap_norm"], sigma_align=p["sigma_align"], span_dim=p["span_dim"],
    )
    seeds = tuple(p["seed"] + s for s in range(p["seeds"]))
    rows = bench.run_ablation(task_kwargs, seeds=seeds,
                              sigma_grid=tuple(p["sigma_grid"]), lam=p["lam"])
    by = {r.variant: r for r in rows}
    sanity = float(np.mean([bench.in_modality_metric(bench.make_toy_task(seed=s, **task_kwargs), p["lam"])
                            for s in seeds]))
    results = {
        "rows": [
            {"variant": r.variant, "train_sigma": r.train_sigma,
             "mean": r.mean, "std": r.std, "seeds": r.seeds}
            for r in rows
        ],
        "in_modality_mean": sanity,
    }
    c1, c21, c22, span, c3 = (by[v].mean for v in ("c1", "c21", "c22", "c22_span", "c3"))
    checks = {
        "c3_ge_c21": c3 >= c21,
        "c3_ge_c22_ge_c1": c3 >= c22 >= c1,
        "c3_minus_c1_ge_0.1": c3 - c1 >= 0.1,
        "span_within_0.05_of_c21": abs(span - c21) <= 0.05,
        "no_transfer_beats_in_modality": sanity >= c3,
    }
    tables = [("ablation", ["variant", "train_sigma", "mean", "std", "seeds"],
               [(r.variant, r.train_sigma, r.mean, r.std, r.seeds) for r in rows])]
    return results, checks, tables


def _cmd_shift_sweep(p):
    task_kwargs = dict(
        n=p["n"], d=p["d"], latent=bench.LatentSpec("classification", p["classes"]),
        gap_norm=p["gap_norm"], sigma_align=p["sigma_align"], span_dim=p["span_dim"],
    )
    seeds = [p["seed"] + s for s in range(p["seeds"])]
    shifts = [float(c) for c in p["shifts"]]
    curves = []
    for s in seeds:
        task = bench.make_toy_task(seed=s, **task_kwargs)
        curves.append(dict(bench.gap_shift_sweep(task, shifts, p["lam"], p["shift_mode"])))
    means = [float(np.mean([c[v] for c in curves])) for v in shifts]
    inversions = sum(1 for a, b in zip(means, means[1:]) if b > a + 0.01)
    results = {"curve": [{"shift": c, "metric": m} for c, m in zip(shifts, means)]}
    checks = {
        "at_most_one_small_inversion": inversions <= 1,
        "degrades_2x_by_last_shift": means[-1] <= 0.5 * means[0],
    }
    tables = [("curve", ["shift", "metric"], list(zip(shifts, means)))]
    return results, checks, tables


def _cmd_export(p):
    matrix = embio.ingest(p["in_file"], p["in_format"])
    embio.export(matrix, p["out_file"], p["out_format"])
    results = {"rows": matrix.n, "cols": matrix.d,
               "written": os.path.getsize(p["out_file"])}
    return results, {"written": os.path.exists(p["out_file"])}, []


_DEFAULTS = {
    "simulate-init": {"n": 1000, "d": 512, "dex": 25, "dey": 230, "gamma": 0.99, "seed": 0},
    "train-sim": {
        "n": 256, "d": 512, "dex": 25, "dey": 230, "tau": 0.07, "learning_rate": 0.1,
        "steps": 20000, "record_every": 100, "renormalize_each_step": False,
        "gradient_form": "span", "init": "prenorm", "seed": 0,
    },
    "verify-gradients": {"batches": 100, "max_n": 8, "max_d": 16,
                         "taus": [0.01, 0.07, 0.5], "h": 1e-5, "seed": 0},
    "stable-region": {"n": 8, "d": 16, "taus": [0.01, 0.07, 0.5], "delta": 0.01,
                      "instances": 1000, "seed": 0},
    "mlp-collapse": {"depth": 20, "width": 512, "n_inputs": 1000, "probe_stride": 5,
                     "seeds": 5, "gamma": 0.99, "seed": 0},
    "gap-stats": {"n": 10000, "d": 512, "span_dim": 64, "gap_norm": 0.83, "sigma": 0.05,
                  "noise_mode": "full", "group_size": 100, "pairs_per_group": 1000,
                  "x_file": "", "y_file": "", "file_format": "mmeb", "seed": 0},
    "c3-bench": {"n": 5000, "d": 64, "classes": 10, "span_dim": 16, "gap_norm": 0.83,
                 "sigma_align": 0.05, "seeds": 5, "lam": 1e-3,
                 "sigma_grid": [0.01, 0.05, 0.1, 0.2], "seed": 0},
    "shift-sweep": {"n": 5000, "d": 64, "classes": 10, "span_dim": 16, "gap_norm": 0.0,
                    "sigma_align": 0.05, "seeds": 5, "lam": 1e-3,
                    "shifts": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
                    "shift_mode": "orthogonal", "seed": 0},
    "export": {"in_file": "", "in_format": "mmeb", "out_file": "", "out_format": "csv",
               "seed": 0},
}

_RUNNERS = {
    "simulate-init": _cmd_simulate_init,
    "train-sim": _cmd_train_sim,
    "verify-gradients": _cmd_verify_gradients,
    "stable-region": _cmd_stable_region,
    "mlp-collapse": _cmd_mlp_collapse,
    "gap-stats": _cmd_gap_stats,
    "c3-bench": _cmd_c3_bench,
    "shift-sweep": _cmd_shift_sweep,
    "export": _cmd_export,
}


def resolve_config(command: str, config_path: str | None, seed: int | None) -> dict:
    """Defaults, overridden by the JSON config file, overridden by --seed."""
    params = dict(_DEFAULTS[command])
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = sorted(set(loaded) - set(params))
        if unknown:
            raise ValueError(f"unknown config keys for {command}: {', '.join(unknown)}")
        params.update(loaded)
    if seed is not None:
        params["seed"] = seed
    return params


def run_command(command: str, params: dict, out_dir: str, fmt: str = "both",
                long_running: bool = False) -> bool:
    """Execute one command and write its reports; returns the pass flag."""
    runner = _RUNNERS[command]
    if command == "train-sim":
        results, checks, tables = runner(params, long_running=long_running)
    else:
        results, checks, tables = runner(params)
    config = dict(params, long_running=long_running) if command == "train-sim" else params
    return write_reports(out_dir, command, config, results, checks, tables, fmt)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gaplab",
        description="Experiments on the geometry of multi-modal contrastive embedding spaces.",
    )
    parser.add_argument("command", choices=sorted(_RUNNERS))
    parser.add_argument("--config", help="JSON file overriding the command's defaults")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default="gaplab-reports", help="report output directory")
    parser.add_argument("--format", choices=["json", "csv", "both"], default="both")
    parser.add_argument("--long-running", action="store_true",
                        help="full-scale contrastive training reproduction (hours)")
    args = parser.parse_args(argv)

    try:
        params = resolve_config(args.command, args.config, args.seed)
        ok = run_command(args.command, params, args.out, args.format, args.long_running)
    except (ValueError, OSError, embio.EmbeddingFileError) as exc:
        print(f"gaplab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if not ok:
        print(f"gaplab {args.command}: one or more checks failed (see reports)", file=sys.stderr)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
