"""Canonical names for the seven summary-quality dimensions."""

DIMENSIONS: tuple[str, ...] = (
    "Consistency",
    "Coherence",
    "Relevance",
    "Fluency",
    "Readability",
    "Naturalness",
    "Factuality",
)

DIMENSION_SET = frozenset(DIMENSIONS)

_BY_CASEFOLD = {name.casefold(): name for name in DIMENSIONS}


def canonical_dimension(name: str) -> str | None:
    """Return the canonical spelling for a dimension name, or None if unknown."""
    return _BY_CASEFOLD.get(name.casefold())


def ordered(dimensions, order: tuple[str, ...] = DIMENSIONS) -> list[str]:
    """Sort a collection of dimension names into the given canonical order."""
    wanted = set(dimensions)
    return [d for d in order if d in wanted]
