"""Domain-aware filter: split each raw catalog into reduced valid data
and full-fidelity event data.

Every row is kept, truncated to the first c data attributes. Rows of
objects flagged this cycle are additionally emitted in full under their
event id, so event analysis never loses attributes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .domain import CatalogTuple, Eset, ValidTuple, format_eid

log = logging.getLogger(__name__)


@dataclass
class FilterOutput:
    valid: list[ValidTuple]
    event_rows: dict[str, CatalogTuple] = field(default_factory=dict)
    unmatched_oids: set[str] = field(default_factory=set)


def filter_cycle(
    catalog: Sequence[CatalogTuple],
    eset: Eset,
    active: Mapping[str, str],
    c: int,
) -> FilterOutput:
    """One cycle of filtering.

    ``active`` maps each currently-open event's oid to its eid; a flagged
    oid not in it starts a new event keyed oid|t. Flagged oids missing
    from the catalog are counted and skipped — detector/catalog races are
    operational noise, not errors.
    """
    if c < 1:
        raise ValueError(f"attribute cut must keep at least one column, got {c}")

    valid = [ValidTuple(r.oid, r.x, r.y, r.t, r.d[:c]) for r in catalog]

    event_rows: dict[str, CatalogTuple] = {}
    unmatched: set[str] = set()
    if eset.oids:
        by_oid = {r.oid: r for r in catalog}
        for oid in eset.oids:
            row = by_oid.get(oid)
            if row is None:
                unmatched.add(oid)
                continue
            eid = active.get(oid) or format_eid(oid, eset.t)
            event_rows[eid] = row
        if unmatched:
            log.warning(
                "cycle %d: %d flagged oids missing from catalog", eset.t, len(unmatched)
            )

    return FilterOutput(valid=valid, event_rows=event_rows, unmatched_oids=unmatched)
