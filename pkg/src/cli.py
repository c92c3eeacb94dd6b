"""
cli.py - 명령행 인터페이스

서브커맨드:
    simulate   시나리오의 모든 링크를 추적하여 channel.csv 작성
    allocate   (AP, 파장) 할당 최적화 후 allocation.csv / objective.txt / vs_table2.txt 작성
    report     simulate + allocate 결과로 사용자별 그래프 데이터 (fig3~5) 작성
    calibrate  내장 시나리오 세 가지로 정성적 주장 확인 (calibration.txt)
    history    실행 이력 조회

종료 코드: 0 성공 / 1 입력·검증 오류 / 2 할당 불가 / 3 내부 오류
"""

import argparse
import logging
import sys
import time
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from allocate import SOLVERS, AllocationProblem, Assignment, compare_to_reference
from db import get_db
from errors import BoundViolationError, InfeasibleAllocationError, OWCError, ShapeMismatchError, UnknownScenarioError
from file_storage import (
    ALLOCATION_CSV,
    CALIBRATION_TXT,
    CHANNEL_CSV,
    FIG3_CSV,
    FIG4_CSV,
    FIG5_CSV,
    OBJECTIVE_TXT,
    SCENARIO_JSON,
    VS_TABLE2_TXT,
    ChannelCache,
    RunStorage,
    get_cache,
    sanitize_name,
)
from full_config import BANDWIDTH_BRACKETS, RESOLUTION_PRESETS, TOOL_VERSION, config
from linkbudget import OOK_THRESHOLD_DB, ber_ook, meets_threshold, supported_rate
from metrics import BW_CONVENTIONS, ChannelMatrix, build_channel_matrix
from raytrace import BounceConfig
from scene import (
    BUILTIN_NAMES,
    Scenario,
    builtin_scenario,
    dump_scenario,
    is_builtin,
    load_scenario,
    reference_assignment,
    scenario_hash,
    truncate_users,
)
from scene.models import OBJECTIVES

logger = logging.getLogger("OWCSimulator")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_INTERNAL = 3

CHANNEL_HEADER = ("user", "branch", "ap", "dc_gain", "bw_3db_hz", "delay_spread_s")
ALLOCATION_HEADER = (
    "user", "ap", "wavelength", "branch", "sinr_db", "meets_threshold",
    "supported_rate_bps", "ber_ook", "fec_required",
)
FIG3_HEADER = ("user", "ap", "branch", "wavelength", "bw_3db_hz")
FIG4_HEADER = ("user", "sinr_db", "threshold_db", "meets_threshold")
FIG5_HEADER = ("user", "supported_rate_bps", "fec_required")

_OBJECTIVE_FLAGS = {"db": "db_sum", "linear": "linear_sum"}
DEFAULT_RUNS_DIR = Path("runs")


# ==================== 사용자별 결과 ====================

@dataclass(frozen=True)
class UserResult:
    """할당된 링크 한 개의 보고용 값."""
    user_id: int
    ap_id: int
    wavelength: str
    branch: int
    sinr_db: float
    meets_threshold: bool
    supported_rate_bps: float
    ber_ook: float
    bw_3db_hz: float

    def row(self) -> Tuple[Any, ...]:
        return (
            self.user_id, self.ap_id, self.wavelength, self.branch, self.sinr_db,
            self.meets_threshold, self.supported_rate_bps, self.ber_ook, not self.meets_threshold,
        )

    def db_row(self) -> Dict[str, Any]:
        return {
            "user_id": self.user_id,
            "ap_id": self.ap_id,
            "wavelength": self.wavelength,
            "branch": self.branch,
            "sinr_db": self.sinr_db,
            "meets_threshold": self.meets_threshold,
            "supported_rate_bps": self.supported_rate_bps,
        }


def user_results(scenario: Scenario, problem: AllocationProblem, assignment: Assignment,
                 kappa: float) -> List[UserResult]:
    """배정 결과를 사용자별 SINR / BER / 지원 전송률로 정리."""
    channel = problem.channel
    results = []
    for link in assignment.links:
        u = problem.user_ids.index(link.user_id)
        a = problem.ap_ids.index(link.ap_id)
        bw = float(channel.bw_3db[u, link.branch - 1, a])
        results.append(UserResult(
            user_id=link.user_id,
            ap_id=link.ap_id,
            wavelength=link.wavelength.value,
            branch=link.branch,
            sinr_db=link.sinr_db,
            meets_threshold=meets_threshold(link.sinr_db),
            supported_rate_bps=supported_rate(bw, scenario.noise.receiver_bandwidth,
                                              scenario.rate_for(link.user_id), kappa),
            ber_ook=float(ber_ook(link.sinr_linear)),
            bw_3db_hz=bw,
        ))
    return results


def channel_rows(matrix: ChannelMatrix):
    """channel.csv 행: 사용자 → 브랜치(1부터) → AP 순."""
    for u, user_id in enumerate(matrix.user_ids):
        for b in range(matrix.num_branches):
            for a, ap_id in enumerate(matrix.ap_ids):
                yield (
                    int(user_id), b + 1, int(ap_id),
                    matrix.dc_gain[u, b, a], matrix.bw_3db[u, b, a], matrix.delay_spread[u, b, a],
                )


# ==================== 공통 준비 ====================

def resolve_scenario(ref: str, users: Optional[int] = None) -> Scenario:
    """내장 이름 또는 JSON 경로로 시나리오 로드 (--users N 이면 앞쪽 N명만)."""
    if is_builtin(ref):
        scenario = builtin_scenario(ref)
    else:
        path = Path(ref)
        if not path.suffix and not path.exists():
            raise UnknownScenarioError(f"Unknown scenario: {ref}. Available: {list(BUILTIN_NAMES)}")
        scenario = load_scenario(path)
    if users is not None:
        scenario = truncate_users(scenario, users)
    return scenario


def bounce_config(resolution: str, bounces: int) -> BounceConfig:
    preset = config.get_resolution_info(resolution)
    cfg = BounceConfig(
        max_order=bounces,
        elem_size_bounce1=preset.elem_size_bounce1,
        elem_size_bounce2=preset.elem_size_bounce2,
    )
    cfg.validate()
    return cfg


def _cache(args: argparse.Namespace) -> ChannelCache:
    cache = ChannelCache(Path(args.cache_dir)) if args.cache_dir else get_cache()
    if getattr(args, "clear_cache", False):
        removed = cache.clear()
        logger.info(f"Cleared {removed} cached channel matrices from {cache.cache_dir}")
    return cache


def _out_dir(args: argparse.Namespace, default_name: str) -> Path:
    return Path(args.out) if args.out else DEFAULT_RUNS_DIR / sanitize_name(default_name)


def _objective(args: argparse.Namespace, scenario: Scenario) -> str:
    return _OBJECTIVE_FLAGS[args.objective] if args.objective else scenario.solver.objective


def _progress(pct: int, msg: str) -> None:
    logger.info(f"[{pct:3d}%] {msg}")


def _settings(args: argparse.Namespace) -> Dict[str, Any]:
    """플래그 기본값을 설정(config)으로 채움."""
    if args.resolution:
        config.set_resolution(args.resolution)
    kappa = args.kappa if getattr(args, "kappa", None) is not None else config.kappa
    if kappa <= 0:
        raise ValueError(f"--kappa must be > 0, got {kappa}")
    return {
        "resolution": config.resolution,
        "bw_convention": args.bw_convention or config.bw_convention,
        "workers": args.workers if args.workers is not None else config.workers,
        "kappa": kappa,
    }


class _History:
    """실행 이력 기록. DB 오류는 경고만 남기고 종료 코드에 영향을 주지 않습니다."""

    def __init__(self, command: str, scenario_name: str, **fields: Any):
        self.run_id: Optional[int] = None
        try:
            self.run_id = get_db().start_run(command, scenario_name, **fields)
        except Exception as e:
            logger.warning(f"Run history unavailable: {e}")

    def finish(self, status: str, error_message: Optional[str] = None,
               users: Sequence[UserResult] = (), **fields: Any) -> None:
        if self.run_id is None:
            return
        try:
            db = get_db()
            db.finish_run(self.run_id, status, error_message, **fields)
            if users:
                db.add_run_users(self.run_id, [u.db_row() for u in users])
        except Exception as e:
            logger.warning(f"Failed to record run {self.run_id}: {e}")


# ==================== simulate ====================

def cmd_simulate(args: argparse.Namespace) -> int:
    settings = _settings(args)
    history = _History("simulate", args.scenario, resolution=settings["resolution"], bounces=args.bounces)
    try:
        scenario = resolve_scenario(args.scenario, args.users)
        cfg = bounce_config(settings["resolution"], args.bounces)
        storage = RunStorage(_out_dir(args, scenario.name))

        with storage.lock():
            started = time.perf_counter()
            matrix = build_channel_matrix(
                scenario, cfg, cache=_cache(args), bw_convention=settings["bw_convention"],
                workers=settings["workers"], progress=_progress,
            )
            elapsed = time.perf_counter() - started

            storage.write_csv(CHANNEL_CSV, CHANNEL_HEADER, channel_rows(matrix))
            dump_scenario(scenario, storage.path(SCENARIO_JSON))
            storage.update_manifest(
                "simulate",
                {
                    "bounce_config": cfg.as_dict(),
                    "resolution": settings["resolution"],
                    "bw_convention": settings["bw_convention"],
                    "timings_s": {"channel": round(elapsed, 3)},
                    "finished_at": datetime.now().isoformat(timespec="seconds"),
                },
                tool_version=TOOL_VERSION,
                scenario=scenario.name,
                scenario_hash=scenario_hash(scenario),
            )
    except Exception as e:
        history.finish("failed", str(e))
        raise

    history.finish("success", scenario_name=scenario.name, scenario_hash=scenario_hash(scenario),
                   out_dir=str(storage.out_dir))
    links = matrix.num_users * matrix.num_branches * matrix.num_aps
    print(f"✅ {scenario.name}: {links}개 링크 → {storage.path(CHANNEL_CSV)} ({elapsed:.1f}초)")
    return EXIT_OK


# ==================== allocate ====================

def _write_vs_table2(storage: RunStorage, scenario: Scenario, problem: AllocationProblem,
                     assignment: Assignment) -> bool:
    """내장 시나리오면 발표된 할당과 비교한 vs_table2.txt 작성."""
    if not is_builtin(scenario.name):
        return False
    kept = set(scenario.user_ids)
    reference = [r for r in reference_assignment(scenario.name) if r.user_id in kept]
    if {r.user_id for r in reference} != kept:
        logger.warning(f"Users of '{scenario.name}' do not match the published assignment, comparison skipped")
        return False
    report = compare_to_reference(assignment, reference, problem)
    storage.write_text(VS_TABLE2_TXT, f"scenario: {scenario.name}\n" + report.to_text())
    return True


def run_allocation(scenario: Scenario, matrix: ChannelMatrix, objective: str, solver: str,
                   kappa: float) -> Tuple[AllocationProblem, Assignment, List[UserResult]]:
    problem = AllocationProblem(matrix, scenario.noise, objective=objective, tiebreak=scenario.solver.tiebreak)
    assignment = SOLVERS[solver](problem)
    return problem, assignment, user_results(scenario, problem, assignment, kappa)


def cmd_allocate(args: argparse.Namespace) -> int:
    settings = _settings(args)
    history = _History("allocate", args.scenario, resolution=settings["resolution"], bounces=args.bounces,
                       solver=args.solver)
    try:
        scenario = resolve_scenario(args.scenario, args.users)
        objective = _objective(args, scenario)
        cfg = bounce_config(settings["resolution"], args.bounces)
        storage = RunStorage(_out_dir(args, scenario.name))

        with storage.lock():
            started = time.perf_counter()
            matrix = build_channel_matrix(
                scenario, cfg, cache=_cache(args), bw_convention=settings["bw_convention"],
                workers=settings["workers"], progress=_progress,
            )
            channel_done = time.perf_counter()
            problem, assignment, results = run_allocation(scenario, matrix, objective, args.solver,
                                                          settings["kappa"])
            solved = time.perf_counter()

            below = [r.user_id for r in results if not r.meets_threshold]
            if below:
                logger.warning(f"Users below {OOK_THRESHOLD_DB} dB in '{scenario.name}': {below}")

            storage.write_csv(ALLOCATION_CSV, ALLOCATION_HEADER, (r.row() for r in results))
            storage.write_text(OBJECTIVE_TXT, "\n".join([
                f"objective: {objective}",
                f"solver: {args.solver}",
                f"value: {assignment.objective_value!r}",
                f"users_below_threshold: {len(below)}",
            ]))
            compared = _write_vs_table2(storage, scenario, problem, assignment)
            storage.update_manifest(
                "allocate",
                {
                    "bounce_config": cfg.as_dict(),
                    "resolution": settings["resolution"],
                    "bw_convention": settings["bw_convention"],
                    "solver": {"name": args.solver, "objective": objective, "tiebreak": scenario.solver.tiebreak},
                    "kappa": settings["kappa"],
                    "compared_to_reference": compared,
                    "timings_s": {
                        "channel": round(channel_done - started, 3),
                        "solve": round(solved - channel_done, 3),
                    },
                    "finished_at": datetime.now().isoformat(timespec="seconds"),
                },
                tool_version=TOOL_VERSION,
                scenario=scenario.name,
                scenario_hash=scenario_hash(scenario),
            )
    except Exception as e:
        history.finish("failed", str(e))
        raise

    history.finish(
        "success", users=results, scenario_name=scenario.name, scenario_hash=scenario_hash(scenario),
        objective=objective, out_dir=str(storage.out_dir), objective_value=assignment.objective_value,
        users_below_threshold=len(below),
    )
    print(f"✅ {scenario.name}: {objective} = {assignment.objective_value:.6g} ({args.solver})")
    print(f"   기준 미달 사용자: {below if below else '없음'}")
    return EXIT_OK


# ==================== report ====================

def cmd_report(args: argparse.Namespace) -> int:
    storage = RunStorage(Path(args.out))
    storage.require([CHANNEL_CSV, ALLOCATION_CSV])

    with storage.lock():
        channel = {
            (row["user"], row["branch"], row["ap"]): row["bw_3db_hz"]
            for row in storage.read_csv(CHANNEL_CSV)
        }
        allocation = storage.read_csv(ALLOCATION_CSV)

        fig3, fig4, fig5 = [], [], []
        for row in allocation:
            key = (row["user"], row["branch"], row["ap"])
            if key not in channel:
                raise ShapeMismatchError(
                    f"{ALLOCATION_CSV} link user {key[0]} / branch {key[1]} / AP {key[2]} is not in {CHANNEL_CSV}"
                )
            fig3.append((row["user"], row["ap"], row["branch"], row["wavelength"], channel[key]))
            fig4.append((row["user"], row["sinr_db"], OOK_THRESHOLD_DB, row["meets_threshold"]))
            fig5.append((row["user"], row["supported_rate_bps"], row["fec_required"]))

        storage.write_csv(FIG3_CSV, FIG3_HEADER, fig3)
        storage.write_csv(FIG4_CSV, FIG4_HEADER, fig4)
        storage.write_csv(FIG5_CSV, FIG5_HEADER, fig5)
        storage.update_manifest("report", {
            "files": [FIG3_CSV, FIG4_CSV, FIG5_CSV],
            "users": len(allocation),
            "finished_at": datetime.now().isoformat(timespec="seconds"),
        })

    print(f"✅ 그래프 데이터 {len(allocation)}명 → {storage.out_dir}")
    return EXIT_OK


# ==================== calibrate ====================

@dataclass(frozen=True)
class ClaimResult:
    name: str
    passed: bool
    detail: str


def _evaluate_claims(outcomes: Dict[str, List[UserResult]], bracket: Tuple[float, float]) -> List[ClaimResult]:
    conference = outcomes["conference_table"]
    met = sum(1 for r in conference if r.meets_threshold)
    below = {
        name: [r.user_id for r in outcomes[name] if not r.meets_threshold]
        for name in ("cocktail1", "cocktail2")
    }
    lo, hi = bracket
    outside = [r.user_id for r in conference if not lo <= r.bw_3db_hz <= hi]
    return [
        ClaimResult(
            "conference_all_meet", met == len(conference),
            f"{met}/{len(conference)} conference users >= {OOK_THRESHOLD_DB} dB",
        ),
        ClaimResult(
            "cocktail_some_below", any(below.values()),
            "below threshold: " + ", ".join(f"{name} {users}" for name, users in below.items()),
        ),
        ClaimResult(
            "conference_bw_bracket", not outside,
            f"bracket [{lo:.3g}, {hi:.3g}] Hz, users outside: {outside}",
        ),
    ]


def cmd_calibrate(args: argparse.Namespace) -> int:
    settings = _settings(args)
    cfg = bounce_config(settings["resolution"], args.bounces)
    cache = _cache(args)
    bracket = BANDWIDTH_BRACKETS[settings["resolution"]]
    objective = _OBJECTIVE_FLAGS[args.objective] if args.objective else OBJECTIVES[0]
    storage = RunStorage(_out_dir(args, "calibration"))

    matrices: Dict[Tuple[str, str], ChannelMatrix] = {}

    def outcomes(convention: str, ambient: bool) -> Dict[str, List[UserResult]]:
        result = {}
        for name in BUILTIN_NAMES:
            scenario = builtin_scenario(name)
            if not ambient:
                scenario = replace(scenario, noise=replace(scenario.noise, ambient_shot_noise=False))
            if (name, convention) not in matrices:
                matrices[(name, convention)] = build_channel_matrix(
                    scenario, cfg, cache=cache, bw_convention=convention,
                    workers=settings["workers"], progress=_progress,
                )
            _, _, result[name] = run_allocation(scenario, matrices[(name, convention)], objective,
                                                args.solver, settings["kappa"])
        return result

    with storage.lock():
        started = time.perf_counter()
        baseline = outcomes(settings["bw_convention"], True)
        claims = _evaluate_claims(baseline, bracket)

        alternative = next(c for c in BW_CONVENTIONS if c != settings["bw_convention"])
        variants = [
            (f"bw_convention={alternative}", alternative, True),
            ("ambient_shot_noise=false", settings["bw_convention"], False),
            (f"bw_convention={alternative} + ambient_shot_noise=false", alternative, False),
        ]
        flips: Dict[str, List[str]] = {c.name: [] for c in claims if not c.passed}
        if flips:
            for label, convention, ambient in variants:
                for claim in _evaluate_claims(outcomes(convention, ambient), bracket):
                    if claim.name in flips and claim.passed:
                        flips[claim.name].append(label)

        lines = [
            f"calibration (resolution {settings['resolution']}, bounces {args.bounces}, "
            f"bw_convention {settings['bw_convention']}, objective {objective}, solver {args.solver})",
            f"threshold_db: {OOK_THRESHOLD_DB}",
            "",
        ]
        for claim in claims:
            lines.append(f"[{'PASS' if claim.passed else 'FAIL'}] {claim.name}: {claim.detail}")
            if claim.name in flips:
                flipped = ", ".join(flips[claim.name]) or "none of the alternative flags"
                lines.append(f"    flipped by: {flipped}")
        for name in BUILTIN_NAMES:
            lines += ["", f"{name}:", "user | ap | branch | wavelength | sinr_db | bw_3db_hz | meets_threshold"]
            for r in baseline[name]:
                lines.append(
                    f"{r.user_id} | {r.ap_id} | {r.branch} | {r.wavelength} | {r.sinr_db!r} | "
                    f"{r.bw_3db_hz!r} | {'yes' if r.meets_threshold else 'no'}"
                )
        storage.write_text(CALIBRATION_TXT, "\n".join(lines))
        storage.update_manifest(
            "calibrate",
            {
                "bounce_config": cfg.as_dict(),
                "resolution": settings["resolution"],
                "bw_convention": settings["bw_convention"],
                "solver": {"name": args.solver, "objective": objective},
                "claims": {c.name: c.passed for c in claims},
                "timings_s": {"total": round(time.perf_counter() - started, 3)},
                "finished_at": datetime.now().isoformat(timespec="seconds"),
            },
            tool_version=TOOL_VERSION,
        )

    for claim in claims:
        print(f"{'✅' if claim.passed else '❌'} {claim.name}: {claim.detail}")
    return EXIT_OK


# ==================== history ====================

def cmd_history(args: argparse.Namespace) -> int:
    db = get_db()
    if args.stats:
        stats = db.get_stats()
        print("=" * 60)
        print("📊 실행 이력 통계")
        print("=" * 60)
        print(f"총 실행: {stats['total_runs']:,}회 (실패 {stats['failed_runs']:,}회)")
        for name, count in sorted(stats["runs_per_scenario"].items()):
            print(f"   {name}: {count:,}회")
        return EXIT_OK

    runs = db.get_recent_runs(args.limit)
    if not runs:
        print("📭 실행 이력이 없습니다.")
        return EXIT_OK
    print(f"{'id':>5}  {'시작':<19}  {'명령':<9} {'시나리오':<20} {'상태':<8} 목적값")
    print("-" * 80)
    for run in runs:
        started = run.started_at.strftime('%Y-%m-%d %H:%M:%S') if run.started_at else "-"
        value = f"{run.objective_value:.6g}" if run.objective_value is not None else "-"
        print(f"{run.id:>5}  {started:<19}  {run.command:<9} {run.scenario_name:<20} {run.status:<8} {value}")
    return EXIT_OK


# ==================== 인자 파서 ====================

class _ArgumentParser(argparse.ArgumentParser):
    """사용법 오류를 종료 코드 1로 보고하는 파서 (2는 할당 불가 전용)."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    trace = argparse.ArgumentParser(add_help=False)
    trace.add_argument("--resolution", choices=list(RESOLUTION_PRESETS), default=None,
                       help="반사 요소 해상도 (기본: OWC_RESOLUTION 또는 desk)")
    trace.add_argument("--bounces", type=int, choices=[0, 1, 2], default=2, help="최대 반사 차수")
    trace.add_argument("--bw-convention", choices=list(BW_CONVENTIONS), default=None,
                       help="3 dB 대역폭 규약")
    trace.add_argument("--cache-dir", default=None, help="채널 행렬 캐시 디렉토리 (기본: OWC_CACHE_DIR)")
    trace.add_argument("--clear-cache", action="store_true", help="계산 전에 캐시 파일을 모두 삭제")
    trace.add_argument("--workers", type=int, default=None, help="광선 추적 스레드 수")
    trace.add_argument("--out", default=None, help="출력 디렉토리")

    scenario = argparse.ArgumentParser(add_help=False)
    scenario.add_argument("--scenario", required=True, help=f"내장 이름 {list(BUILTIN_NAMES)} 또는 JSON 경로")
    scenario.add_argument("--users", type=int, default=None, help="앞쪽 N명만 사용")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--objective", choices=list(_OBJECTIVE_FLAGS), default=None, help="목적 함수 (dB 합 / 선형 합)")
    solver.add_argument("--solver", choices=list(SOLVERS), default="exact", help="할당 알고리즘")
    solver.add_argument("--kappa", type=float, default=None, help="전송률 / 대역폭 비 (기본: OWC_KAPPA 또는 1.42)")

    parser = _ArgumentParser(prog="owc", description="실내 광무선 채널 시뮬레이터 / WDMA 할당 최적화")
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[scenario, trace], help="채널 행렬 계산 (channel.csv)")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("allocate", parents=[scenario, trace, solver], help="할당 최적화 (allocation.csv)")
    p.set_defaults(handler=cmd_allocate)

    p = sub.add_parser("report", help="사용자별 그래프 데이터 (fig3~5)")
    p.add_argument("--out", required=True, help="simulate / allocate 출력 디렉토리")
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("calibrate", parents=[trace, solver], help="내장 시나리오 정성적 주장 확인")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("history", help="실행 이력 조회")
    p.add_argument("--limit", type=int, default=20, help="표시할 실행 수")
    p.add_argument("--stats", action="store_true", help="통계만 표시")
    p.set_defaults(handler=cmd_history)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except InfeasibleAllocationError as e:
        logger.error(f"❌ {e}")
        return EXIT_INFEASIBLE
    except BoundViolationError:
        logger.exception("Internal error")
        return EXIT_INTERNAL
    except (OWCError, ValueError) as e:
        logger.error(f"❌ {e}")
        return EXIT_VALIDATION
    except Exception:
        logger.exception("Internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
