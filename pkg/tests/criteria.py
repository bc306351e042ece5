"""Shared record of acceptance-criterion outcomes, printed at session end."""

from __future__ import annotations

from collections import defaultdict

TITLES = {
    1: "published BEC(0.5) unpolarized fractions",
    2: "scaling exponents from regression",
    3: "encoder agrees with the generator-matrix oracle",
    4: "list decoding at L = 2^k is maximum likelihood",
    5: "decoder families agree without swaps",
    6: "swaps never increase the polarization metric",
    7: "memory pool bounds hold",
    8: "extended CRC-aided FER campaign",
}

RESULTS: dict[int, list[tuple[bool, str]]] = defaultdict(list)


def record(number: int, ok: bool, detail: str = "") -> None:
    RESULTS[number].append((bool(ok), detail))


def summary_lines() -> list[str]:
    lines = []
    for number, title in TITLES.items():
        outcomes = RESULTS.get(number)
        if not outcomes:
            lines.append(f"CRITERION {number}: SKIPPED - {title} (not run)")
            continue
        failed = [detail for ok, detail in outcomes if not ok]
        status = "PASS" if not failed else "FAIL"
        detail = f"{len(outcomes) - len(failed)}/{len(outcomes)} checks passed"
        if failed:
            detail += "; " + "; ".join(failed)
        lines.append(f"CRITERION {number}: {status} - {title} ({detail})")
    return lines
