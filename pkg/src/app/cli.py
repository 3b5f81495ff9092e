# -*- coding: utf-8 -*-
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from src.features.experiments import run_experiment
from src.features.export import export_csv, export_json, export_xlsx
from src.features.plotdata import Figure, estimate_curves, realization_curves, write_curves
from src.features.records import ExperimentKind, ExperimentResult
from src.features.session import MANIFEST_NAME, RunManifest, SessionManager
from src.features.settings import SettingsManager
from src.features.verify import VerifyPlan, run_verify
from src.utils.errors import CapacityError, CornerGrowthError, VerificationFailure
from src.utils.parser import parse_config, parse_sweep

log = logging.getLogger(__name__)

_MODULE = "cli"

OUT_ENV = "CORNERGROWTH_OUT"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_CAPACITY = 3

SETTING_KEYS = ("workers", "out_dir", "far_multiplier", "seed")


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON 配置文件")
    common.add_argument("--seed", type=int, help="主随机种子 (U64)")
    common.add_argument("--workers", type=int, help="并行进程数")
    common.add_argument("--out", help="输出目录")
    common.add_argument("--far-multiplier", type=float, dest="far_multiplier", help="Busemann 远端目标倍数 M/N")
    common.add_argument("--max-cells", type=int, dest="max_cells", help="单个表格的格点上限")
    common.add_argument("--verbose", action="store_true", help="输出调试日志")
    return common


def _experiment_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--experiment", help="实验名称，例如 CoalSlow")
    flags.add_argument("--rho", type=float)
    flags.add_argument("--N", type=int, dest="N")
    flags.add_argument("--grid", help="参数网格，逗号分隔")
    flags.add_argument("--r-grid", dest="secondary_grid", help="CoalCorner 的 r 网格，逗号分隔")
    flags.add_argument("--replicas", type=int)
    flags.add_argument("--alpha", type=float)
    flags.add_argument("--beta", type=float)
    flags.add_argument("--lambda", type=float, dest="lambda")
    flags.add_argument("--eta", type=float)
    return flags


def _output_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--xlsx", action="store_true", help="同时导出 records.xlsx")
    flags.add_argument("--strict", action="store_true", help="形状检查失败时也返回退出码 2")
    flags.add_argument("--timing", action="store_true", help="在 CSV 中写入 wall_time_s")
    return flags


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cornergrowth", description="指数角增长模型（LPP）模拟与实验")
    commands = parser.add_subparsers(dest="command", required=True)
    common, experiment, output = _common_flags(), _experiment_flags(), _output_flags()
    commands.add_parser("simulate", parents=[common, experiment, output], help="运行单个实验")
    verify = commands.add_parser("verify", parents=[common], help="运行精确引理与附录检查")
    verify.add_argument("--quick", action="store_true", help="缩小规模的快速检查")
    verify.add_argument("--strict", action="store_true", help="统计检查失败时也返回退出码 2")
    commands.add_parser("sweep", parents=[common, output], help="按配置文件批量运行实验")
    plot = commands.add_parser("plotdata", parents=[common, experiment], help="导出两列绘图数据")
    plot.add_argument("--figure", choices=[f.value for f in Figure], default=Figure.ESTIMATES.value)
    settings = commands.add_parser("settings", help="查看或修改持久化默认值")
    settings.add_argument("--show", action="store_true")
    settings.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help=f"可用键：{', '.join(SETTING_KEYS)}")
    settings.add_argument("--reset", action="store_true")
    settings.add_argument("--verbose", action="store_true")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    keys = (
        "experiment",
        "rho",
        "N",
        "grid",
        "secondary_grid",
        "replicas",
        "alpha",
        "beta",
        "lambda",
        "eta",
        "seed",
        "workers",
        "far_multiplier",
        "max_cells",
    )
    values = vars(args)
    return {key: values[key] for key in keys if values.get(key) is not None}


def resolve_out_dir(args: argparse.Namespace, settings: SettingsManager, fallback: str) -> Path:
    if args.out:
        return Path(args.out)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    if settings.get_out_dir():
        return Path(settings.get_out_dir()) / fallback
    return Path("runs") / fallback


def summary_dict(result: ExperimentResult, strict: bool) -> dict:
    return {
        "config": result.config.as_dict(),
        "fits": {name: fit.as_dict() for name, fit in result.fits.items()},
        "checks": [check.as_dict() for check in result.checks],
        "reports": result.reports,
        "wall_time_s": result.wall_time_s,
        "passed": not result.failed(strict),
    }


def _write_manifest(out_dir: Path, manifest: RunManifest, files: list[Path]) -> None:
    for path in files:
        manifest.add_file(path)
        if path.suffix == ".csv":
            manifest.add_csv_records(path)
    manifest.finish()
    export_json(out_dir / MANIFEST_NAME, manifest.as_dict())


def _remember(settings: SettingsManager, out_dir: Path) -> None:
    SessionManager(settings).add_recent_run(str(out_dir.resolve()))


def _raise_if_failed(failures: list, where: Path) -> None:
    if failures:
        names = "; ".join(check.name for check in failures)
        raise VerificationFailure(_MODULE, f"{len(failures)} checks failed ({names}); see {where}")


def cmd_simulate(args: argparse.Namespace, settings: SettingsManager) -> int:
    overrides = _overrides(args)
    config = parse_config(args.config, overrides, settings.defaults())
    out_dir = resolve_out_dir(args, settings, f"{config.experiment.label}-{config.master_seed}")
    manifest = RunManifest({"file": config.echo, "flags": overrides, "resolved": config.as_dict()}, config.master_seed)
    result = run_experiment(config)
    files = [out_dir / "records.csv"]
    export_csv(files[0], result.records, timing=args.timing)
    if args.xlsx:
        files.append(out_dir / "records.xlsx")
        export_xlsx(files[-1], result.records, timing=args.timing)
    files.append(out_dir / "summary.json")
    export_json(files[-1], summary_dict(result, args.strict))
    _write_manifest(out_dir, manifest, files)
    _remember(settings, out_dir)
    print(f"实验 {config.experiment.label} 完成：{len(result.records)} 条记录，输出目录 {out_dir}")
    _raise_if_failed(result.failed(args.strict), out_dir / "summary.json")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, settings: SettingsManager) -> int:
    if not args.config:
        raise CornerGrowthError(_MODULE, "sweep needs --config with a \"runs\" list")
    overrides = _overrides(args)
    configs = parse_sweep(args.config, overrides, settings.defaults())
    out_dir = resolve_out_dir(args, settings, f"sweep-{Path(args.config).stem}")
    manifest = RunManifest({"file": str(args.config), "flags": overrides, "resolved": [c.as_dict() for c in configs]}, configs[0].master_seed)
    results = [run_experiment(config) for config in configs]
    records = [record for result in results for record in result.records]
    files = [out_dir / "records.csv"]
    export_csv(files[0], records, timing=args.timing)
    if args.xlsx:
        files.append(out_dir / "records.xlsx")
        export_xlsx(files[-1], records, timing=args.timing)
    files.append(out_dir / "summary.json")
    export_json(files[-1], {"runs": [summary_dict(result, args.strict) for result in results]})
    _write_manifest(out_dir, manifest, files)
    _remember(settings, out_dir)
    print(f"批量运行完成：{len(results)} 个实验，{len(records)} 条记录，输出目录 {out_dir}")
    _raise_if_failed([check for result in results for check in result.failed(args.strict)], out_dir / "summary.json")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, settings: SettingsManager) -> int:
    defaults = settings.defaults()
    seed = args.seed if args.seed is not None else defaults.get("seed", 0)
    workers = args.workers or defaults.get("workers", 1)
    plan = VerifyPlan.quick() if args.quick else VerifyPlan()
    far = args.far_multiplier or defaults.get("far_multiplier")
    if far is not None:
        plan = replace(plan, far_multiplier=float(far))
    out_dir = resolve_out_dir(args, settings, f"verify-{seed}")
    manifest = RunManifest({"plan": plan.as_dict(), "workers": workers}, seed)
    kwargs = {"max_cells": args.max_cells} if args.max_cells else {}
    report = run_verify(plan, seed, workers=workers, **kwargs)
    summary = {
        "plan": plan.as_dict(),
        "master_seed": seed,
        "checks": [check.as_dict() for check in report.checks],
        "reports": report.reports,
        "wall_time_s": report.wall_time_s,
        "passed": not report.failed(args.strict),
    }
    path = out_dir / "summary.json"
    export_json(path, summary)
    _write_manifest(out_dir, manifest, [path])
    _remember(settings, out_dir)
    passed = sum(1 for check in report.checks if check.passed)
    print(f"验证完成：{passed}/{len(report.checks)} 项通过，输出目录 {out_dir}")
    _raise_if_failed(report.failed(args.strict), path)
    return EXIT_OK


def cmd_plotdata(args: argparse.Namespace, settings: SettingsManager) -> int:
    figure = Figure(args.figure)
    overrides = _overrides(args)
    overrides.setdefault("experiment", ExperimentKind.COAL_SLOW.label if figure is not Figure.EXIT else ExperimentKind.EXIT_TAIL.label)
    config = parse_config(args.config, overrides, settings.defaults())
    out_dir = resolve_out_dir(args, settings, f"plot-{figure.value}-{config.master_seed}")
    manifest = RunManifest({"file": config.echo, "flags": overrides, "resolved": config.as_dict(), "figure": figure.value}, config.master_seed)
    if figure is Figure.ESTIMATES:
        curves = estimate_curves(run_experiment(config))
    else:
        curves = realization_curves(figure, config)
    files = write_curves(out_dir, curves)
    _write_manifest(out_dir, manifest, files)
    _remember(settings, out_dir)
    print(f"绘图数据已导出：{len(files)} 个文件，输出目录 {out_dir}")
    return EXIT_OK


def _apply_setting(settings: SettingsManager, item: str) -> None:
    key, sep, value = item.partition("=")
    key = key.strip().replace("-", "_")
    if not sep or key not in SETTING_KEYS:
        raise CornerGrowthError(_MODULE, f"settings --set expects KEY=VALUE with KEY in {', '.join(SETTING_KEYS)}, got {item!r}")
    try:
        if key == "workers":
            settings.set_workers(int(value))
        elif key == "far_multiplier":
            settings.set_far_multiplier(float(value))
        elif key == "seed":
            settings.set_seed(int(value))
        else:
            settings.set_out_dir(value.strip())
    except ValueError:
        raise CornerGrowthError(_MODULE, f"invalid value for {key}: {value!r}") from None


def cmd_settings(args: argparse.Namespace, settings: SettingsManager) -> int:
    if args.reset:
        settings.reset()
        print("已恢复默认设置")
    for item in args.set:
        _apply_setting(settings, item)
    settings.sync()
    if args.show or not (args.reset or args.set):
        print(f"设置文件：{settings.file_name()}")
        print(f"workers = {settings.get_workers()}")
        print(f"out_dir = {settings.get_out_dir()}")
        print(f"far_multiplier = {settings.get_far_multiplier()}")
        print(f"seed = {settings.get_seed()}")
        print("最近运行：")
        for run in SessionManager(settings).get_recent_runs():
            print(f"  {run.describe()}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "plotdata": cmd_plotdata,
    "settings": cmd_settings,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        settings = SettingsManager()
        return COMMANDS[args.command](args, settings)
    except CapacityError as exc:
        print(f"容量不足：{exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except VerificationFailure as exc:
        print(f"验证失败：{exc}", file=sys.stderr)
        return EXIT_VERIFY
    except CornerGrowthError as exc:
        print(f"配置错误：{exc}", file=sys.stderr)
        return EXIT_CONFIG
