"""
Command-line entry point.

    python -m ams train     --config run.cfg --set meta.M=3 --seed 0 --out runs/
    python -m ams compare   --config run.cfg --seeds 0..9 --jobs 8
    python -m ams eval      --checkpoint runs/ams_seed0/theta.json --seed 0
    python -m ams gradcheck --seed 7
    python -m ams suite     --set suite.preset=quantity-imbalance

Exit codes: 0 success, 1 configuration/usage/file error, 2 numeric abort
(in compare: at least one run of the matrix aborted).
"""

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv

from ams import __version__
from ams.exceptions import ConfigError, NumericError, RunAbortedError
from ams.models.experiment_models import PRESETS
from ams.services.comparison import compare_samplers
from ams.services.config_loader import load_config, parse_seeds, resolve_out_dir
from ams.services.experiment_runner import (
    SUITE_FILENAME, run_dir_name, run_experiment, suite_from_config,
)
from ams.services.file_manager import FileManager
from ams.services.gradcheck_suite import run_gradcheck
from ams.services.meta_learner import evaluate_adaptation
from ams.services.task_generator import (
    exact_task_quantity, load_suite, save_suite, task_quantity,
)
from ams.services.task_model import TaskModel
from ams.utils import seeding
from ams.utils.formatting import fmt_mean_std

logger = logging.getLogger("ams")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class UsageError(Exception):
    """Unknown flag, subcommand or malformed argument."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ams", description="Adversarial meta sampling experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None,
                        help="DEBUG, INFO, WARNING, ... (default: $AMS_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="run one experiment")
    _add_config_args(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None,
                   help="threads evaluating one meta-batch (default: run.task_workers)")
    p.add_argument("--out", default=None, help="output root (default: run.out_dir, $AMS_OUT_DIR, ./runs)")

    p = sub.add_parser("compare", help="run the sampler x seed matrix")
    _add_config_args(p)
    p.add_argument("--seeds", default=None, help="N or N..M (default: run.seeds)")
    p.add_argument("--samplers", default=None, help="comma-separated (default: compare.samplers)")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("eval", help="evaluate a theta checkpoint on the target domains")
    _add_config_args(p)
    p.add_argument("--checkpoint", required=True, help="theta.json written by train")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gradcheck", help="finite-difference gradient report")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=3)

    p = sub.add_parser("suite", help="describe (and optionally save) a domain suite")
    _add_config_args(p)
    p.add_argument("--out", default=None, help="write suite.json to this path")
    p.add_argument("--list", action="store_true", help="list the preset names")
    return parser


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.overrides)
    if args.jobs is not None:
        cfg.run.task_workers = args.jobs
        cfg.validate()
    seed = args.seed if args.seed is not None else parse_seeds(cfg.run.seeds)[0]
    root = args.out or resolve_out_dir(cfg)
    run_dir = os.path.join(root, run_dir_name(cfg.sampler.kind, seed))
    _, summary = run_experiment(cfg, seed, run_dir)
    print(f"{run_dir}: final meta-test loss {summary.mean_final_metatest:.6f}, "
          f"spearman {summary.spearman:.4f}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.overrides)
    seeds = parse_seeds(args.seeds or cfg.run.seeds)
    samplers = ([s.strip() for s in args.samplers.split(',') if s.strip()]
                if args.samplers else list(cfg.compare.samplers))
    if len(samplers) < 2:
        raise ConfigError("a comparison needs at least two samplers", key='compare.samplers')
    cfg.compare.samplers = samplers
    cfg.validate()
    out_dir = args.out or resolve_out_dir(cfg)
    jobs = args.jobs if args.jobs is not None else cfg.run.jobs
    table, runs = compare_samplers(cfg, samplers, seeds, out_dir, jobs)
    for kind in table.samplers:
        print(f"{kind:<10} {fmt_mean_std(*table.overall[kind])}  "
              f"spearman={table.spearman[kind]:+.3f}  aborted={table.aborted[kind]}")
    if any(r.aborted for r in runs):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.overrides)
    model = TaskModel.from_dict(FileManager.load_json(args.checkpoint))
    # a run directory carries the suite it was trained on
    run_suite = os.path.join(os.path.dirname(args.checkpoint), SUITE_FILENAME)
    suite = load_suite(run_suite) if os.path.exists(run_suite) else suite_from_config(cfg)
    rng = seeding.make_rng(args.seed, seeding.EVALUATION)
    for target in suite.targets:
        result = evaluate_adaptation(model, model.theta, suite, target.domain_id,
                                     cfg.run.eval_shots, cfg.run.eval_steps,
                                     cfg.run.eval_tasks, rng, alpha=cfg.meta.alpha)
        print(f"target {target.domain_id}: {fmt_mean_std(result.mean, result.std, 6)}")
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    report, passed = run_gradcheck(args.seed, args.trials)
    print(report, end="")
    return EXIT_OK if passed else EXIT_NUMERIC


def cmd_suite(args: argparse.Namespace) -> int:
    if args.list:
        print("\n".join(PRESETS))
        return EXIT_OK
    cfg = load_config(args.config, args.overrides)
    suite = suite_from_config(cfg)
    print(f"preset={suite.preset} family={suite.family} K={suite.K} w={suite.w}")
    print(f"{'id':>3} {'role':<7}{'pool':>7}{'difficulty':>12}{'ln C(V,w)':>13}  C(V,w)")
    for role, specs in (('source', suite.sources), ('target', suite.targets)):
        for spec in specs:
            exact = exact_task_quantity(spec.pool_size, suite.w)
            count = "-" if exact is None else str(exact)
            print(f"{spec.domain_id:>3} {role:<7}{spec.pool_size:>7}{spec.difficulty:>12.4f}"
                  f"{task_quantity(spec.pool_size, suite.w):>13.3f}  {count}")
    if args.out:
        save_suite(suite, args.out)
    return EXIT_OK


COMMANDS = {
    'train': cmd_train,
    'compare': cmd_compare,
    'eval': cmd_eval,
    'gradcheck': cmd_gradcheck,
    'suite': cmd_suite,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, dispatch the subcommand and map failures to exit codes."""
    load_dotenv()
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
    except UsageError as e:
        print(f"ams: error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    level = (args.log_level or os.environ.get('AMS_LOG_LEVEL') or 'INFO').upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT)

    try:
        return COMMANDS[args.command](args)
    except (RunAbortedError, NumericError) as e:
        print(f"ams: numeric abort: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, UsageError) as e:
        print(f"ams: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"ams: file not found: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"ams: invalid input: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
