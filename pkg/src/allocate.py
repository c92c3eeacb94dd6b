"""
allocate.py - WDMA 자원 할당 모듈

사용자마다 (AP, 파장) 하나를 배정하고, 배정이 정해지면 각 사용자는 SINR 이 가장 큰
ADR 브랜치를 선택합니다(select-best). 목적 함수는 사용자 SINR 합(dB 합 또는 선형 합)입니다.

제약 모델 (이진 변수 x[u,a,w]):
    Σ_{a,w} x[u,a,w] = 1        (사용자마다 정확히 하나)
    Σ_u x[u,a,w] ≤ 1            (한 (AP, 파장)은 최대 한 사용자)
간섭이 다른 사용자의 배정에 따라 달라지므로 SINR 은 배정에 대해 비선형입니다.
선형화 대신 깊이 우선 분기 한정법으로 전역 최적을 구합니다. 노드 상한은 남은 사용자를
빈 (AP, 파장)에 하나씩 짝짓는 할당 완화(scipy linear_sum_assignment)로 계산합니다.

동률은 사용자 ID 순서로 나열한 (AP ID, 파장 R<Y<G<B) 키의 사전식 최소값으로 정합니다.
탐색은 단일 스레드입니다.
"""

import itertools
import logging
import math
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from errors import (
    BoundViolationError,
    InfeasibleAllocationError,
    InstanceTooLargeError,
    ShapeMismatchError,
)
from linkbudget import LinkBudget, NoiseModel, check_exclusive, classify_links, noise_denominator
from metrics import ChannelMatrix
from scene.builtin import ReferenceLink
from scene.models import OBJECTIVES, Wavelength

logger = logging.getLogger("OWCSimulator")

DB_FLOOR = -200.0
MAX_EXHAUSTIVE_NODES = 10_000_000

PairMap = Mapping[int, Tuple[int, Wavelength]]


@dataclass(frozen=True)
class AssignedLink:
    """사용자 한 명의 배정 (branch 는 1부터 시작)."""
    user_id: int
    ap_id: int
    wavelength: Wavelength
    branch: int
    sinr_db: float
    sinr_linear: float

    @property
    def triple(self) -> Tuple[int, int, Wavelength]:
        return (self.ap_id, self.branch, self.wavelength)


@dataclass(frozen=True)
class Assignment:
    links: Tuple[AssignedLink, ...]
    objective_value: float
    objective: str = "db_sum"

    def pairs(self) -> Dict[int, Tuple[int, Wavelength]]:
        return {link.user_id: (link.ap_id, link.wavelength) for link in self.links}

    def link(self, user_id: int) -> AssignedLink:
        for link in self.links:
            if link.user_id == user_id:
                return link
        raise KeyError(user_id)

    @property
    def user_ids(self) -> Tuple[int, ...]:
        return tuple(link.user_id for link in self.links)

    @property
    def key(self) -> Tuple[Tuple[int, int], ...]:
        return tuple((link.ap_id, link.wavelength.order) for link in self.links)


class AllocationProblem:
    """
    할당 문제.

    Attributes:
        channel: 채널 행렬
        noise: 잡음 모델
        objective: "db_sum" 또는 "linear_sum"
        tiebreak: "lexicographic"
    """

    def __init__(self, channel: ChannelMatrix, noise: NoiseModel,
                 objective: str = "db_sum", tiebreak: str = "lexicographic"):
        if objective not in OBJECTIVES:
            raise ValueError(f"Unknown objective: {objective}. Available: {list(OBJECTIVES)}")
        if tiebreak != "lexicographic":
            raise ValueError(f"Unknown tiebreak: {tiebreak}. Available: ['lexicographic']")
        self.channel = channel
        self.noise = noise
        self.objective = objective
        self.tiebreak = tiebreak

        self.currents = channel.photocurrents()  # (U, B, A, W)
        self.incident = self.currents.sum(axis=(2, 3))  # (U, B)
        self.user_ids = [int(u) for u in channel.user_ids]
        self.ap_ids = [int(a) for a in channel.ap_ids]
        self.wavelengths = list(channel.wavelengths)
        self.user_order = sorted(range(len(self.user_ids)), key=lambda u: self.user_ids[u])
        self.pairs: List[Tuple[int, int]] = sorted(
            ((a, w) for a in range(len(self.ap_ids)) for w in range(len(self.wavelengths))),
            key=lambda p: (self.ap_ids[p[0]], self.wavelengths[p[1]].order),
        )
        self._pair_index = {pair: i for i, pair in enumerate(self.pairs)}
        self._ap_index = {ap: i for i, ap in enumerate(self.ap_ids)}
        self._w_index = {w: i for i, w in enumerate(self.wavelengths)}
        self._user_index = {uid: i for i, uid in enumerate(self.user_ids)}

    @property
    def num_users(self) -> int:
        return len(self.user_ids)

    @property
    def num_pairs(self) -> int:
        return len(self.pairs)

    def check_feasible(self) -> None:
        if self.num_users < 1:
            raise ValueError("Allocation requires at least one user")
        if self.num_users > self.num_pairs:
            raise InfeasibleAllocationError(self.num_users, len(self.ap_ids), len(self.wavelengths))

    # ==================== SINR 평가 ====================

    def term(self, sinr_lin: float) -> float:
        """사용자 한 명의 목적 함수 항."""
        if self.objective == "linear_sum":
            return sinr_lin
        if sinr_lin <= 0:
            return DB_FLOOR
        return max(10.0 * math.log10(sinr_lin), DB_FLOOR)

    def term_array(self, sinr_lin: np.ndarray) -> np.ndarray:
        if self.objective == "linear_sum":
            return sinr_lin
        with np.errstate(divide="ignore"):
            return np.maximum(10.0 * np.log10(sinr_lin), DB_FLOOR)

    def branch_sinr(self, u: int, a: int, w: int, interferers: Sequence[int]) -> np.ndarray:
        """사용자 u 가 (a, w)를 받을 때 브랜치별 선형 SINR (간섭 AP 목록 주어짐)."""
        sig = self.currents[u, :, a, w]
        inter = self.currents[u][:, sorted(interferers), w]
        i_sum = inter.sum(axis=1)
        i_sq = np.square(inter).sum(axis=1)
        ambient = np.clip(self.incident[u] - sig - i_sum, 0.0, None)
        return sig * sig / noise_denominator(sig, i_sum, i_sq, ambient, self.noise)

    def interference_free_sinr(self) -> np.ndarray:
        """(U, A, W) 다른 사용자가 없을 때 최적 브랜치 선형 SINR."""
        c = self.currents
        ambient = np.clip(self.incident[:, :, None, None] - c, 0.0, None)
        sinr_lin = c * c / noise_denominator(c, 0.0, 0.0, ambient, self.noise)
        return sinr_lin.max(axis=1)

    def evaluate_indices(self, assign: Mapping[int, int]) -> Tuple[Dict[int, Tuple[int, float]], float]:
        """
        사용자 인덱스 → 쌍 인덱스 배정 평가.

        Returns:
            ({u: (브랜치 인덱스, 선형 SINR)}, 목적 함수 값)
        """
        on_w: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
        for u, p in assign.items():
            a, w = self.pairs[p]
            on_w[w].append((a, u))

        results: Dict[int, Tuple[int, float]] = {}
        total = 0.0
        for u in self.user_order:
            if u not in assign:
                continue
            a, w = self.pairs[assign[u]]
            interferers = [a2 for a2, u2 in on_w[w] if u2 != u]
            sinr_b = self.branch_sinr(u, a, w, interferers)
            b = int(np.argmax(sinr_b))
            results[u] = (b, float(sinr_b[b]))
            total += self.term(results[u][1])
        return results, total

    def to_indices(self, pairs: PairMap) -> Dict[int, int]:
        check_exclusive(pairs)
        assign = {}
        for user_id, (ap_id, wavelength) in pairs.items():
            try:
                u = self._user_index[user_id]
                p = self._pair_index[(self._ap_index[ap_id], self._w_index[wavelength])]
            except KeyError as e:
                raise ValueError(f"Unknown user/AP/wavelength in assignment: {e}") from None
            assign[u] = p
        return assign

    def make_assignment(self, assign: Mapping[int, int]) -> Assignment:
        results, total = self.evaluate_indices(assign)
        links = []
        for u in self.user_order:
            if u not in results:
                continue
            b, s = results[u]
            a, w = self.pairs[assign[u]]
            links.append(AssignedLink(
                user_id=self.user_ids[u],
                ap_id=self.ap_ids[a],
                wavelength=self.wavelengths[w],
                branch=b + 1,
                sinr_db=10.0 * math.log10(s) if s > 0 else -math.inf,
                sinr_linear=s,
            ))
        return Assignment(links=tuple(links), objective_value=total, objective=self.objective)

    def pair_key(self, p: int) -> Tuple[int, int]:
        a, w = self.pairs[p]
        return (self.ap_ids[a], self.wavelengths[w].order)


def evaluate(problem: AllocationProblem, assignment: Union[Assignment, PairMap]) -> Assignment:
    """
    부분/전체 배정 평가: 사용자별 최적 브랜치 SINR 과 목적 함수 값.

    Raises:
        AssignmentConflictError: 두 사용자가 같은 (AP, 파장)을 공유
    """
    pairs = assignment.pairs() if isinstance(assignment, Assignment) else assignment
    return problem.make_assignment(problem.to_indices(pairs))


def link_budgets(problem: AllocationProblem, assignment: Assignment) -> List[LinkBudget]:
    """배정된 브랜치 기준의 사용자별 LinkBudget (신호 / 간섭 / 조명 분류 포함)."""
    pairs = assignment.pairs()
    budgets = []
    for link in assignment.links:
        u = problem.user_ids.index(link.user_id)
        b = link.branch - 1
        classes = classify_links(pairs, link.user_id, problem.ap_ids, problem.wavelengths)
        c = problem.currents[u, b]

        def current(pair):
            return float(c[problem.ap_ids.index(pair[0]), problem.wavelengths.index(pair[1])])

        budgets.append(LinkBudget(
            user_id=link.user_id,
            branch=link.branch,
            ap=link.ap_id,
            wavelength=link.wavelength,
            signal_photocurrent=current(classes.signal),
            interference_photocurrents=[current(p) for p in classes.interfering],
            ambient_photocurrent=sum(current(p) for p in classes.illumination),
            sinr_db=link.sinr_db,
        ))
    return budgets


# ==================== Solvers ====================

def solve_greedy(problem: AllocationProblem) -> Assignment:
    """
    탐욕 기준해: 최대 링크 이득이 큰 사용자부터, 남은 (AP, 파장) 중
    간섭 없는 SINR 이 가장 큰 쌍을 차지합니다.
    """
    problem.check_feasible()
    free_sinr = problem.interference_free_sinr()
    best_gain = problem.channel.dc_gain.reshape(problem.num_users, -1).max(axis=1)
    order = sorted(problem.user_order, key=lambda u: (-best_gain[u], problem.user_ids[u]))

    free = list(range(problem.num_pairs))
    assign: Dict[int, int] = {}
    for u in order:
        values = [problem.term(float(free_sinr[u][problem.pairs[p]])) for p in free]
        pick = free[int(np.argmax(values))]
        assign[u] = pick
        free.remove(pick)
    return problem.make_assignment(assign)


def solve_exhaustive(problem: AllocationProblem) -> Assignment:
    """전수 탐색 (검증용). 탐색 공간이 1e7 을 넘으면 InstanceTooLargeError."""
    problem.check_feasible()
    n_users, n_pairs = problem.num_users, problem.num_pairs
    size = math.perm(n_pairs, n_users)
    if size > MAX_EXHAUSTIVE_NODES:
        raise InstanceTooLargeError(
            f"Exhaustive search over {size:,} assignments exceeds the {MAX_EXHAUSTIVE_NODES:,} limit"
        )

    order = problem.user_order
    best_value = -math.inf
    best_assign: Optional[Dict[int, int]] = None
    # 쌍 인덱스가 사전식 순서이므로 먼저 나온 동률 해가 가장 작은 키
    for perm in itertools.permutations(range(n_pairs), n_users):
        assign = dict(zip(order, perm))
        _, value = problem.evaluate_indices(assign)
        if value > best_value:
            best_value, best_assign = value, assign
    assert best_assign is not None
    return problem.make_assignment(best_assign)


def improve_locally(problem: AllocationProblem, assign: Mapping[int, int]) -> Dict[int, int]:
    """
    이동(빈 쌍으로 옮기기) / 교환(두 사용자의 쌍 맞바꾸기) 지역 탐색.
    목적 함수가 더 이상 좋아지지 않을 때까지 반복합니다.
    """
    assign = dict(assign)
    _, value = problem.evaluate_indices(assign)
    order = problem.user_order
    improved = True
    while improved:
        improved = False
        for i, u in enumerate(order):
            used = set(assign.values())
            moves = [{u: p} for p in range(problem.num_pairs) if p not in used]
            moves += [{u: assign[v], v: assign[u]} for v in order[i + 1:]]
            for move in moves:
                trial = {**assign, **move}
                _, trial_value = problem.evaluate_indices(trial)
                if trial_value > value + 1e-12 * (1.0 + abs(value)):
                    assign, value, improved = trial, trial_value, True
                    break
    return assign


class _BranchAndBound:
    """
    깊이 우선 분기 한정 탐색.

    배정 순서는 간섭 없는 최대 항이 큰 사용자부터입니다. 동률 키는 항상 사용자 ID 순서입니다.
    """

    def __init__(self, problem: AllocationProblem, check_bounds: bool = False):
        self.problem = problem
        self.check_bounds = check_bounds
        n_users = problem.num_users
        n_b = problem.currents.shape[1]
        n_w = len(problem.wavelengths)
        best_free = problem.term_array(problem.interference_free_sinr()).reshape(n_users, -1).max(axis=1)
        self.key_order = problem.user_order
        self.order = sorted(problem.user_order, key=lambda u: (-best_free[u], problem.user_ids[u]))
        self.assign: Dict[int, int] = {}
        self.used = np.zeros(problem.num_pairs, dtype=bool)
        self.used_aw = np.zeros((len(problem.ap_ids), n_w), dtype=bool)
        self.aps_on_w: List[List[int]] = [[] for _ in range(n_w)]
        self.s = np.zeros((n_users, n_b, n_w))  # 파장별 사용 중인 AP 광전류 합
        self.q = np.zeros((n_users, n_b, n_w))  # 제곱합
        self.best_value = -math.inf
        self.best_key: Optional[Tuple[Tuple[int, int], ...]] = None
        self.best_assign: Optional[Dict[int, int]] = None
        self.nodes = 0
        self.pruned = 0

    def _key(self, assign: Mapping[int, int]) -> Tuple[Tuple[int, int], ...]:
        return tuple(self.problem.pair_key(assign[u]) for u in self.key_order)

    def _tol(self) -> float:
        return 1e-9 * (1.0 + abs(self.best_value)) if math.isfinite(self.best_value) else 0.0

    def offer(self, assign: Mapping[int, int], value: float) -> None:
        key = self._key(assign)
        if value > self.best_value or (value == self.best_value and self.best_key is not None and key < self.best_key):
            self.best_value, self.best_key, self.best_assign = value, key, dict(assign)

    def _push(self, u: int, p: int) -> None:
        a, w = self.problem.pairs[p]
        self.assign[u] = p
        self.used[p] = True
        self.used_aw[a, w] = True
        self.aps_on_w[w].append(a)
        self._refresh(w)

    def _pop(self, u: int) -> None:
        p = self.assign.pop(u)
        a, w = self.problem.pairs[p]
        self.used[p] = False
        self.used_aw[a, w] = False
        self.aps_on_w[w].remove(a)
        self._refresh(w)

    def _refresh(self, w: int) -> None:
        inter = self.problem.currents[:, :, sorted(self.aps_on_w[w]), w]
        self.s[:, :, w] = inter.sum(axis=2)
        self.q[:, :, w] = np.square(inter).sum(axis=2)

    def _candidate_terms(self, users: Sequence[int]) -> np.ndarray:
        """(k, A, W) 현재 간섭 하에서 남은 쌍에 대한 목적 함수 항 (사용 중인 쌍은 -inf)."""
        problem = self.problem
        c = problem.currents[users]
        s = self.s[users][:, :, None, :]
        q = self.q[users][:, :, None, :]
        ambient = np.clip(problem.incident[users][:, :, None, None] - c - s, 0.0, None)
        sinr_lin = (c * c / noise_denominator(c, s, q, ambient, problem.noise)).max(axis=1)
        terms = problem.term_array(sinr_lin)
        return np.where(self.used_aw[None, :, :], -np.inf, terms)

    def bound(self, depth: int) -> float:
        """
        노드 상한.

        배정된 사용자는 현재까지의 간섭만 고려한 항을 씁니다. 남은 사용자는 현재 간섭 하의
        (사용자 x 빈 쌍) 항 행렬에서 최대 가중 할당을 구해 한 쌍이 두 번 쓰이지 않게 합니다.
        간섭은 늘기만 하므로 두 값 모두 상한입니다.
        """
        problem = self.problem
        total = 0.0
        for u in self.order[:depth]:
            a, w = problem.pairs[self.assign[u]]
            others = [a2 for a2 in self.aps_on_w[w] if a2 != a]
            total += problem.term(float(problem.branch_sinr(u, a, w, others).max()))
        rest = self.order[depth:]
        if rest:
            free = ~self.used_aw.reshape(-1)
            weights = self._candidate_terms(rest).reshape(len(rest), -1)[:, free]
            rows, cols = linear_sum_assignment(weights, maximize=True)
            total += float(weights[rows, cols].sum())
        return total

    def dfs(self, depth: int) -> float:
        """부분 트리에서 도달한 최선 리프 값 반환 (가지치기된 리프 제외)."""
        self.nodes += 1
        problem = self.problem
        if depth == len(self.order):
            _, value = problem.evaluate_indices(self.assign)
            self.offer(self.assign, value)
            return value

        node_bound = self.bound(depth)
        if node_bound < self.best_value - self._tol():
            self.pruned += 1
            return -math.inf

        u = self.order[depth]
        terms = self._candidate_terms([u])[0]
        children = [p for p in range(problem.num_pairs) if not self.used[p]]
        children.sort(key=lambda p: (-terms[problem.pairs[p]], p))

        best_below = -math.inf
        for p in children:
            self._push(u, p)
            try:
                best_below = max(best_below, self.dfs(depth + 1))
            finally:
                self._pop(u)

        if self.check_bounds and best_below > node_bound + 1e-9 * (1.0 + abs(node_bound)):
            raise BoundViolationError(
                f"Node bound {node_bound!r} below descendant objective {best_below!r} at depth {depth}"
            )
        return best_below

    def run(self, incumbent: Optional[Mapping[int, int]] = None) -> Assignment:
        if incumbent is not None:
            seed = dict(incumbent)
            _, value = self.problem.evaluate_indices(seed)
            self.best_value, self.best_key, self.best_assign = value, self._key(seed), seed
        self.dfs(0)
        assert self.best_assign is not None
        return self.problem.make_assignment(self.best_assign)


def solve_exact(problem: AllocationProblem, check_bounds: bool = False) -> Assignment:
    """
    분기 한정법으로 전역 최적 배정을 찾습니다.

    지역 탐색으로 다듬은 탐욕 해를 초기 현재해로 두고, 동률은 사전식 키로 정합니다.
    check_bounds=True 이면 모든 노드에서 상한이 후손 목적값 이상인지 검사합니다.
    """
    problem.check_feasible()
    started = time.perf_counter()
    incumbent = improve_locally(problem, problem.to_indices(solve_greedy(problem).pairs()))
    search = _BranchAndBound(problem, check_bounds=check_bounds)
    result = search.run(incumbent=incumbent)
    logger.info(
        f"Branch-and-bound: {search.nodes:,} nodes, {search.pruned:,} pruned, "
        f"objective {result.objective_value:.6g} ({time.perf_counter() - started:.2f}s)"
    )
    return result


SOLVERS = {
    "exact": solve_exact,
    "exhaustive": solve_exhaustive,
    "greedy": solve_greedy,
}


# ==================== Reference comparison ====================

@dataclass(frozen=True)
class UserComparison:
    user_id: int
    ours: Tuple[int, int, Wavelength]
    reference: Tuple[int, int, Wavelength]
    ours_sinr_db: float
    reference_sinr_db: float

    @property
    def match(self) -> bool:
        return self.ours == self.reference


@dataclass(frozen=True)
class ComparisonReport:
    users: Tuple[UserComparison, ...]
    objective_ours: float
    objective_reference: float
    objective: str

    @property
    def dominates(self) -> bool:
        tol = 1e-9 * (1.0 + abs(self.objective_reference))
        return self.objective_ours >= self.objective_reference - tol

    @property
    def match_fraction(self) -> float:
        return sum(1 for u in self.users if u.match) / len(self.users) if self.users else 0.0

    def to_text(self) -> str:
        def fmt(t):
            return f"AP {t[0]} / branch {t[1]} / {t[2].label}"

        lines = [
            f"objective ({self.objective}): ours={self.objective_ours!r} reference={self.objective_reference!r}",
            f"dominates: {'yes' if self.dominates else 'no'}",
            f"match_fraction: {self.match_fraction!r}",
            "",
            "user | ours | reference | match | sinr_db ours | sinr_db reference",
        ]
        for u in self.users:
            lines.append(
                f"{u.user_id} | {fmt(u.ours)} | {fmt(u.reference)} | {'yes' if u.match else 'no'} | "
                f"{u.ours_sinr_db!r} | {u.reference_sinr_db!r}"
            )
        return "\n".join(lines) + "\n"


def compare_to_reference(ours: Assignment, reference: Union[Assignment, Sequence[ReferenceLink]],
                         problem: AllocationProblem) -> ComparisonReport:
    """
    발표된(또는 다른) 배정과 비교: 사용자별 (AP, 브랜치, 파장) 일치 여부와
    같은 모델로 평가한 두 목적 함수 값.

    Raises:
        ShapeMismatchError: 두 배정의 사용자 구성이 다름
    """
    if isinstance(reference, Assignment):
        ref_triples = {link.user_id: link.triple for link in reference.links}
        ref_pairs = reference.pairs()
    else:
        ref_triples = {r.user_id: (r.ap_id, r.branch, r.wavelength) for r in reference}
        ref_pairs = {r.user_id: (r.ap_id, r.wavelength) for r in reference}

    if sorted(ref_triples) != sorted(ours.user_ids):
        raise ShapeMismatchError(
            f"Reference users {sorted(ref_triples)} differ from assignment users {sorted(ours.user_ids)}"
        )
    ref_eval = evaluate(problem, ref_pairs)
    ours_eval = evaluate(problem, ours.pairs())

    rows = tuple(
        UserComparison(
            user_id=link.user_id,
            ours=link.triple,
            reference=ref_triples[link.user_id],
            ours_sinr_db=link.sinr_db,
            reference_sinr_db=ref_eval.link(link.user_id).sinr_db,
        )
        for link in ours_eval.links
    )
    return ComparisonReport(
        users=rows,
        objective_ours=ours_eval.objective_value,
        objective_reference=ref_eval.objective_value,
        objective=problem.objective,
    )
