"""Accept/reject gates on metric reports and ranking of the survivors."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from defog.errors import InvalidParams
from defog.metrics import MetricsReport


class Reason(str, enum.Enum):
    SOLID_AREA = "SolidArea"
    FAKE_DETAIL_EVERYWHERE = "FakeDetailEverywhere"
    NO_DETAIL_GAIN = "NoDetailGain"


class RankKey(str, enum.Enum):
    MAX_VVO = "max_vvo"
    RVV = "rvv"

    @classmethod
    def parse(cls, value: "str | RankKey") -> "RankKey":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace("-", "_")
        for key in cls:
            if text in (key.value, key.value.replace("_", "")):
                return key
        raise InvalidParams(f"unknown rank key {value!r}; expected max_vvo or rvv")


@dataclass(frozen=True)
class GateThresholds:
    """``epsilon`` bounds every relative area variance from below, ``tau`` the
    relative variance of variances, and ``mu`` is the VVO some area must exceed.

    With ``strict`` (the default) epsilon must also be below 0.01.
    """

    epsilon: float = 0.001
    tau: float = 1.0
    mu: float = 1.0
    strict: bool = True

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise InvalidParams(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.strict and self.epsilon >= 0.01:
            raise InvalidParams(f"epsilon must be much smaller than 1 (< 0.01), got {self.epsilon}")
        if not (self.tau >= 1 and math.isfinite(self.tau)):
            raise InvalidParams(f"tau must be >= 1, got {self.tau}")
        if not (self.mu >= 1 and math.isfinite(self.mu)):
            raise InvalidParams(f"mu must be >= 1, got {self.mu}")


@dataclass(frozen=True)
class Verdict:
    variant_id: str
    reasons: tuple[Reason, ...] = ()

    @property
    def accepted(self) -> bool:
        return not self.reasons


@dataclass(frozen=True)
class RankedEntry:
    rank: int
    variant_id: str
    key_value: float


@dataclass(frozen=True)
class RankedList:
    key: RankKey
    entries: tuple[RankedEntry, ...] = ()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def ids(self) -> list[str]:
        return [e.variant_id for e in self.entries]

    def rank_of(self, variant_id: str) -> "int | None":
        for e in self.entries:
            if e.variant_id == variant_id:
                return e.rank
        return None


def gate(report: MetricsReport, th: GateThresholds) -> Verdict:
    # All three requirements must hold; a detail gain elsewhere does not excuse a solid area.
    reasons = []
    if any(r < th.epsilon for r in report.rav):
        reasons.append(Reason.SOLID_AREA)
    if report.rvv < th.tau:
        reasons.append(Reason.FAKE_DETAIL_EVERYWHERE)
    if not any(v > th.mu for v in report.vvo):
        reasons.append(Reason.NO_DETAIL_GAIN)
    return Verdict(report.variant_id, tuple(reasons))


def _key_value(report: MetricsReport, key: RankKey) -> float:
    return report.max_vvo if key is RankKey.MAX_VVO else report.rvv


def rank(accepted: Sequence[MetricsReport], key: "RankKey | str" = RankKey.MAX_VVO) -> RankedList:
    """Best first: descending key value, ties broken by ascending variant id."""
    key = RankKey.parse(key)
    ordered = sorted(accepted, key=lambda r: (-_key_value(r, key), r.variant_id))
    return RankedList(
        key,
        tuple(RankedEntry(i + 1, r.variant_id, _key_value(r, key)) for i, r in enumerate(ordered)),
    )


def select_and_rank(
    reports: Iterable[MetricsReport],
    th: GateThresholds,
    key: "RankKey | str" = RankKey.MAX_VVO,
) -> tuple[RankedList, list[Verdict]]:
    reports = list(reports)
    verdicts = [gate(r, th) for r in reports]
    accepted = [r for r, v in zip(reports, verdicts) if v.accepted]
    return rank(accepted, key), verdicts
