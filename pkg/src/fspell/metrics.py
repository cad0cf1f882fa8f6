"""Letter error rate with substitution/deletion/insertion breakdown.

Scores a hypothesis against a reference with a minimal-edit alignment at
unit costs, and extracts the error counts plus a confusion table from the
chosen alignment. When several alignments share the minimal cost, the
traceback prefers substitution over deletion over insertion so the reported
breakdown and confusion pairs are reproducible.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np


@dataclass(frozen=True)
class AlignmentReport:
    substitutions: int
    deletions: int
    insertions: int
    ref_len: int
    confusion_pairs: Mapping[tuple[str, str], int] = field(default_factory=dict)

    @property
    def distance(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def error_rate(self) -> float:
        # may exceed 1 when insertions are numerous; deliberately not clamped
        return self.distance / self.ref_len

    @property
    def accuracy(self) -> float:
        return 1.0 - self.error_rate


def align_and_score(reference: str, hypothesis: str) -> AlignmentReport:
    """Minimal-edit alignment of hypothesis against a non-empty reference."""
    if len(reference) == 0:
        raise ValueError("N must be > 0 (empty reference)")
    n, m = len(reference), len(hypothesis)
    dist = np.zeros((n + 1, m + 1), dtype=np.int64)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dist[i - 1, j - 1] + (reference[i - 1] != hypothesis[j - 1])
            dist[i, j] = min(sub, dist[i - 1, j] + 1, dist[i, j - 1] + 1)

    subs = dels = ins = 0
    confusion: Counter[tuple[str, str]] = Counter()
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i, j] == dist[i - 1, j - 1] + (reference[i - 1] != hypothesis[j - 1]):
            if reference[i - 1] != hypothesis[j - 1]:
                subs += 1
                confusion[(reference[i - 1], hypothesis[j - 1])] += 1
            i, j = i - 1, j - 1
        elif i > 0 and dist[i, j] == dist[i - 1, j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return AlignmentReport(substitutions=subs, deletions=dels, insertions=ins,
                           ref_len=n, confusion_pairs=dict(confusion))


def corpus_report(pairs: Iterable[tuple[str, str]]) -> AlignmentReport:
    """Aggregate counts over (reference, hypothesis) pairs; the error rate
    uses the summed reference length."""
    subs = dels = ins = ref_len = 0
    confusion: Counter[tuple[str, str]] = Counter()
    count = 0
    for reference, hypothesis in pairs:
        rep = align_and_score(reference, hypothesis)
        subs += rep.substitutions
        dels += rep.deletions
        ins += rep.insertions
        ref_len += rep.ref_len
        confusion.update(rep.confusion_pairs)
        count += 1
    if count == 0:
        raise ValueError("empty corpus")
    return AlignmentReport(substitutions=subs, deletions=dels, insertions=ins,
                           ref_len=ref_len, confusion_pairs=dict(confusion))


def top_confusions(report: AlignmentReport, k: int = 5) -> list[tuple[tuple[str, str], int]]:
    """Most frequent (reference letter -> hypothesis letter) substitutions,
    ties broken alphabetically."""
    ranked = sorted(report.confusion_pairs.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def render_error_table(report: AlignmentReport) -> str:
    """Error counts and percentage rates by category, plus top confusions."""
    lines = [
        f"{'':<14}{'Deletions':>12}{'Substitutions':>16}{'Insertions':>12}",
        f"{'Error Count':<14}{report.deletions:>12}{report.substitutions:>16}{report.insertions:>12}",
        (f"{'Error Rate':<14}{100 * report.deletions / report.ref_len:>12.2f}"
         f"{100 * report.substitutions / report.ref_len:>16.2f}"
         f"{100 * report.insertions / report.ref_len:>12.2f}"),
        "",
        f"Letter accuracy: {100 * report.accuracy:.2f}% "
        f"(N={report.ref_len}, S={report.substitutions}, D={report.deletions}, I={report.insertions})",
    ]
    confusions = top_confusions(report)
    if confusions:
        lines.append("Top confusions (reference -> hypothesis):")
        for (ref_ch, hyp_ch), cnt in confusions:
            lines.append(f"  {ref_ch} -> {hyp_ch}: {cnt}")
    return "\n".join(lines) + "\n"
