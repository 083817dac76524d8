"""End-to-end composition: detections -> profile -> diagnosis.

Bits are independent, so datasets run on a bounded thread pool; the
``BITFORENSICS_THREADS`` environment variable caps the worker count.
Results always come back ordered by bit_id, whatever the completion order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .aggregation import BitDamageProfile, MainDamageSummary, build_profile, summarize_bit
from .alignment import AlignmentConfig, align_bit
from .records import BitDetections
from .rules import CauseSet, RuleConfig, classify

THREADS_ENV_VAR = "BITFORENSICS_THREADS"


def worker_count(n_tasks: int) -> int:
    """Pool size: one worker per task, capped by BITFORENSICS_THREADS."""
    cap = os.environ.get(THREADS_ENV_VAR)
    try:
        cap = max(1, int(cap)) if cap else (os.cpu_count() or 1)
    except ValueError:
        cap = os.cpu_count() or 1
    return max(1, min(n_tasks, cap))


@dataclass(frozen=True)
class BitDiagnosis:
    bit_id: str
    profile: BitDamageProfile
    result: CauseSet

    def to_dict(self) -> dict:
        return {
            "bit_id": self.bit_id,
            "causes": self.result.cause_codes,
            "trace": [entry.to_dict() for entry in self.result.trace],
            "profile": self.profile.to_dict(),
        }


def profile_bit(
    bit: BitDetections, alignment: AlignmentConfig = AlignmentConfig()
) -> BitDamageProfile:
    """Align both streams of a bit and accumulate its damage profile."""
    return build_profile(align_bit(bit, alignment), bit.bit_id, bit.num_main_blades)


def diagnose_bit(
    bit: BitDetections,
    alignment: AlignmentConfig = AlignmentConfig(),
    rules: RuleConfig = RuleConfig(),
) -> BitDiagnosis:
    profile = profile_bit(bit, alignment)
    return BitDiagnosis(bit_id=bit.bit_id, profile=profile, result=classify(profile, rules))


def diagnose_dataset(
    bits: Sequence[BitDetections],
    alignment: AlignmentConfig = AlignmentConfig(),
    rules: RuleConfig = RuleConfig(),
) -> list[BitDiagnosis]:
    """Diagnose every bit on a bounded pool; output sorted by bit_id."""
    if not bits:
        return []
    with ThreadPoolExecutor(max_workers=worker_count(len(bits))) as pool:
        results = list(pool.map(lambda b: diagnose_bit(b, alignment, rules), bits))
    return sorted(results, key=lambda d: d.bit_id)


def summarize_dataset(
    bits: Sequence[BitDetections], alignment: AlignmentConfig = AlignmentConfig()
) -> list[MainDamageSummary]:
    """Main-damage summaries per bit (the ML feature source), by bit_id."""
    ordered = sorted(bits, key=lambda b: b.bit_id)
    return [summarize_bit(profile_bit(bit, alignment)) for bit in ordered]
