"""Records the KKT report of every dual fit made while the suite runs."""

import kisvm.selection
import kisvm.wsvm

REPORTS = []
_original = kisvm.wsvm.fit_dual


def _recording_fit_dual(*args, **kwargs):
    sol, report, problem = _original(*args, **kwargs)
    REPORTS.append(report)
    return sol, report, problem


def install():
    kisvm.wsvm.fit_dual = _recording_fit_dual
    kisvm.selection.fit_dual = _recording_fit_dual


def worst():
    """``(count, max violation, max relative gap)`` over recorded fits."""
    if not REPORTS:
        return 0, float("nan"), float("nan")
    return (
        len(REPORTS),
        max(r.max_violation for r in REPORTS),
        max(r.relative_gap for r in REPORTS),
    )
