# app/cli.py
"""
l1-sysid command line:
  simulate        generate a system and one trajectory
  estimate        lasso / least-squares Markov estimate from a saved trajectory
  realize         Ho-Kalman realization of a saved Markov estimate
  verify-theory   Monte Carlo checks of the concentration inequalities
  experiment      config-driven grid run (CSV per metric + JSON report)
  emit-plots      tidy CSVs from a saved JSON report
"""

# >>> MUST BE FIRST LINES <<<
import os
import sys

THIS_DIR = os.path.dirname(os.path.abspath(__file__))
PROJECT_ROOT = os.path.abspath(os.path.join(THIS_DIR, ".."))

if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import argparse
from typing import Dict, List, Optional

import numpy as np

from core.config import Config
from core.design import build_regression
from core.errors import ConfigError, SchemaError, SysIdError
from core.estimators import error_report, estimate_lasso, estimate_ls, lambda_simulation
from core.lti import certify_stability, generate_paper_system, markov_matrix, simulate
from core.models import NoiseConfig
from core.realization import build_hankel, extend_markov, ho_kalman, realization_markov
from core.storage import ArtifactStore, report_from_dict, report_to_dict
from core.rng import stream
from core.theory import check_row_l1, eval_theorem2_bounds
from core.verification import (
    THETA_SAMPLERS,
    quadratic_form_moments,
    verify_deterministic_bound,
    verify_lambda_terms,
    verify_rsv,
)
from app.experiment import run_experiment, sweep_noise, sweep_T
from parsers.config_parser import KEYS, ExperimentConfigParser, format_config
from presenters.plot_data import DETERMINISTIC_METRICS, METRICS, emit_all, emit_plot_data
from presenters.report_builder import ReportBuilder

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

CHECKS = ("rsv", "lambda-terms", "row-l1", "moments", "deterministic")


# ═══════════════════════════════════════════════════════════════
# ARGUMENTS
# ═══════════════════════════════════════════════════════════════

def _add_dims(p: argparse.ArgumentParser, n: int = 40, m: int = 10, inputs: int = 10):
    p.add_argument("--n", type=int, default=n, help="state dimension")
    p.add_argument("--m", type=int, default=m, help="output dimension")
    p.add_argument("--p", type=int, default=inputs, help="input dimension")
    p.add_argument("--bandwidth", type=int, default=5)
    p.add_argument("--target-rho", type=float, default=0.8)


def _add_noise(p: argparse.ArgumentParser):
    p.add_argument("--sigma-u", type=float, default=1.0)
    p.add_argument("--sigma-w2", type=float, default=0.1, help="process-noise variance")
    p.add_argument("--sigma-v2", type=float, default=0.1, help="measurement-noise variance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l1-sysid", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a system and simulate one trajectory")
    _add_dims(p)
    _add_noise(p)
    p.add_argument("--length", type=int, required=True, help="trajectory length L")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("estimate", help="estimate Markov parameters from a saved trajectory")
    p.add_argument("--run", required=True, help="directory written by `simulate`")
    p.add_argument("--T", type=int, required=True, help="horizon")
    p.add_argument("--estimator", choices=("lasso", "ls"), default="lasso")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="regularization (default: simulation rule from the stored noise levels)")
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("realize", help="Ho-Kalman realization of a saved Markov estimate")
    p.add_argument("--run", required=True)
    p.add_argument("--markov", default="markov_lasso.json")
    p.add_argument("--K", type=int, default=None, help="Hankel order (default: estimate horizon)")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--sv-threshold", type=float, default=None)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("verify-theory", help="Monte Carlo checks of the concentration inequalities")
    p.add_argument("--check", choices=CHECKS, required=True)
    _add_dims(p)
    _add_noise(p)
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--sampler", choices=sorted(THETA_SAMPLERS), default="weakly_sparse")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("experiment", help="config-driven grid run")
    p.add_argument("--config", default=None, help="flat key/value config file")
    p.add_argument("--seed", type=int, required=True, help="base seed (overrides the config's base_seed)")
    # base_seed comes from --seed
    for key in ["preset", *(k for k in KEYS if k != "base_seed")]:
        p.add_argument(f"--{key.replace('_', '-')}", dest=f"cfg_{key}", default=None,
                       help=f"override config key '{key}'")
    p.add_argument("--sweep", choices=("none", "T", "noise"), default="none")

    p = sub.add_parser("emit-plots", help="tidy CSVs from a saved JSON report")
    p.add_argument("--report", required=True)
    p.add_argument("--metric", action="append", choices=METRICS, default=None)
    p.add_argument("--group-by", default="estimator,T,N,sigma_w2,sigma_v2")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None, help="accepted for symmetry; unused")

    return parser


# ═══════════════════════════════════════════════════════════════
# COMMANDS
# ═══════════════════════════════════════════════════════════════

def cmd_simulate(args, config: Config, builder: ReportBuilder) -> int:
    out = args.out or os.path.join(config.OUTPUT_DIR, f"run_{args.seed}")
    store = ArtifactStore(out, verbose=config.VERBOSE)
    sys_ = generate_paper_system(args.n, args.m, args.p, args.bandwidth, args.target_rho, args.seed)
    noise = NoiseConfig.from_variances(args.sigma_w2, args.sigma_v2, args.sigma_u, seed=args.seed)
    traj = simulate(sys_, noise, args.length)
    store.save_system(sys_)
    store.save_trajectory(traj)
    cert = certify_stability(sys_, config.TAU_MAX, noise)
    print(f"✓ Simulated L={args.length} for n={sys_.n}, m={sys_.m}, p={sys_.p} "
          f"(rho={cert.rho:.4f}, C_sys={cert.c_sys:.3f}) → {out}")
    return EXIT_OK


def cmd_estimate(args, config: Config, builder: ReportBuilder) -> int:
    store = ArtifactStore(args.run, verbose=config.VERBOSE)
    sys_ = store.load_system("system.json")
    traj = store.load_trajectory()
    data = build_regression(traj, args.T)
    if args.estimator == "lasso":
        noise = traj.noise
        lam = args.lam if args.lam is not None else lambda_simulation(
            noise.sigma_w, noise.sigma_v, args.T, sys_.p, sys_.n, data.N)
        G_hat = estimate_lasso(data, config.lasso_config(lam))
    else:
        G_hat = estimate_ls(data)
        if G_hat.underdetermined:
            print(f"⚠️  N={data.N} < Tp={data.U.shape[1]}: minimum-norm least squares reported")
    store.save_markov(G_hat, f"markov_{args.estimator}.json")
    err = error_report(markov_matrix(sys_, args.T), G_hat)
    store.save_json(err.as_record(), f"error_{args.estimator}.json")
    print(builder.build_error_card(err, f"{args.estimator} estimate (T={args.T}, N={data.N})"))

    cert = certify_stability(sys_, config.TAU_MAX, traj.noise)
    bounds = eval_theorem2_bounds(cert, traj.noise, args.T, sys_.p, sys_.n, data.N, sys=sys_)
    print(builder.build_bounds_card(bounds))
    return EXIT_OK


def cmd_realize(args, config: Config, builder: ReportBuilder) -> int:
    store = ArtifactStore(args.run, verbose=config.VERBOSE)
    G_hat = store.load_markov(args.markov)
    K = args.K or G_hat.K
    H = build_hankel(extend_markov(G_hat, K), K, "padded")
    threshold = args.sv_threshold if args.sv_threshold is not None else config.SV_THRESHOLD
    real = ho_kalman(H, rank=args.rank, sv_threshold=threshold)
    stem = os.path.splitext(os.path.basename(args.markov))[0].replace("markov", "realization")
    store.save_realization(real, f"{stem}.json")

    distance = None
    if os.path.exists(store.path("system.json")):
        truth = store.load_system("system.json")
        distance = float(np.linalg.norm(realization_markov(real, K).G - markov_matrix(truth, K).G))
    print(builder.build_realization_card(real, distance))
    return EXIT_OK


def cmd_verify(args, config: Config, builder: ReportBuilder) -> int:
    noise = NoiseConfig.from_variances(args.sigma_w2, args.sigma_v2, args.sigma_u, seed=args.seed)
    store = ArtifactStore(args.out or config.OUTPUT_DIR, verbose=config.VERBOSE)

    if args.check == "rsv":
        vr = verify_rsv(args.T, args.p, args.N, args.eta, args.trials, args.sampler, args.sigma_u, args.seed)
        print(builder.build_verification_card(vr))
        store.save_json(vr.as_record(), "verify_rsv.json")
        return EXIT_OK

    if args.check == "moments":
        theta = THETA_SAMPLERS[args.sampler](stream(args.seed, "theta"), args.T, args.p)
        moments = quadratic_form_moments(theta, args.T, args.p, args.N, draws=args.trials,
                                         sigma_u=args.sigma_u, seed=args.seed)
        for key, value in moments.items():
            print(f"  {key}: {value:.6g}")
        store.save_json(moments, "verify_moments.json")
        return EXIT_OK

    sys_ = generate_paper_system(args.n, args.m, args.p, args.bandwidth, args.target_rho, args.seed)
    cert = certify_stability(sys_, config.TAU_MAX, noise)

    if args.check == "row-l1":
        check = check_row_l1(markov_matrix(sys_, args.T), cert)
        icon = "✅" if check.all_passed else "❌"
        print(f"{icon} row ℓ1 bound R={check.R:.4g}: {int(check.passed.sum())}/{check.passed.size} rows pass "
              f"(min margin {check.margins.min():.4g})")
        store.save_json({"R": check.R, "row_l1": check.row_l1.tolist(), "passed": check.passed.tolist()},
                        "verify_row_l1.json")
        return EXIT_OK if check.all_passed else EXIT_FAILED

    lam = args.lam if args.lam is not None else lambda_simulation(
        noise.sigma_w, noise.sigma_v, args.T, args.p, args.n, args.N)
    if args.check == "lambda-terms":
        vr = verify_lambda_terms(sys_, cert, noise, args.T, args.N, args.eta, args.trials, lam=lam)
    else:
        vr = verify_deterministic_bound(sys_, cert, noise, args.T, args.N, config.lasso_config(lam),
                                        args.eta, args.trials)
    print(builder.build_verification_card(vr))
    store.save_json(vr.as_record(), f"verify_{args.check.replace('-', '_')}.json")
    return EXIT_OK


def _experiment_overrides(args) -> Dict[str, str]:
    overrides = {key[4:]: value for key, value in vars(args).items()
                 if key.startswith("cfg_") and value is not None}
    overrides["base_seed"] = str(args.seed)
    return overrides


def cmd_experiment(args, config: Config, builder: ReportBuilder) -> int:
    parser = ExperimentConfigParser()
    overrides = _experiment_overrides(args)
    if args.config:
        cfg = parser.parse_file(args.config, overrides)
    else:
        cfg = parser.parse_text("", overrides)

    out = cfg.outputs
    store = ArtifactStore(out, verbose=config.VERBOSE)
    store.save_text(format_config(cfg), "config.cfg")

    if args.sweep == "T":
        summary = sweep_T(cfg, config=config)
        report = summary.report
        print(builder.build_sweep_card(summary))
    elif args.sweep == "noise":
        summary = sweep_noise(cfg, config=config)
        report = summary.report
        print(builder.build_sweep_card(summary))
    else:
        report = run_experiment(cfg, config)

    store.save_json(report_to_dict(report), "report.json")
    emit_all(report, out)
    print(builder.build_experiment_summary(report, cfg))
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_emit_plots(args, config: Config, builder: ReportBuilder) -> int:
    store = ArtifactStore(os.path.dirname(args.report) or ".", verbose=config.VERBOSE)
    report = report_from_dict(store.load_json(os.path.basename(args.report)))
    out = args.out or store.root
    group_by = [key.strip() for key in args.group_by.split(",") if key.strip()]
    for metric in args.metric or DETERMINISTIC_METRICS:
        try:
            paths = emit_plot_data(report, metric, out, group_by)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        for path in paths:
            print(f"✓ Wrote {path}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "realize": cmd_realize,
    "verify-theory": cmd_verify,
    "experiment": cmd_experiment,
    "emit-plots": cmd_emit_plots,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = Config()
    try:
        return COMMANDS[args.command](args, config, ReportBuilder())
    except (ConfigError, SchemaError, FileNotFoundError) as e:
        print(f"❌ {e}")
        return EXIT_USAGE
    except SysIdError as e:
        print(f"❌ {e}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
