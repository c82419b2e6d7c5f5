"""Feature registries: every feature carries a definition and a scaling class."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

INFORMED = "DomainInformed"
AGNOSTIC = "DomainAgnostic"
COMBINED = "Combined"
FAMILIES = (INFORMED, AGNOSTIC, COMBINED)

# CLI / file-name spelling of each family
FAMILY_SLUGS = {"informed": INFORMED, "agnostic": AGNOSTIC, "combined": COMBINED}
PREFIX = {INFORMED: "informed.", AGNOSTIC: "agnostic."}


@dataclass(frozen=True)
class FeatureSpec:
    """One registered feature.

    ``scale_power`` is ``k`` such that feature(c * s) == c**k * feature(s)
    for c > 0; 0 marks a scale-invariant feature, 1 a scale-equivariant one.
    """

    name: str
    family: str
    definition: str
    scale_power: int
    func: Callable

    @property
    def scaling(self) -> str:
        return {0: "invariant", 1: "equivariant"}.get(self.scale_power, f"power-{self.scale_power}")


_REGISTRY: dict[str, dict[str, FeatureSpec]] = {INFORMED: {}, AGNOSTIC: {}}


def register_feature(family: str, name: str, definition: str, scale_power: int):
    """Decorator adding ``func(context) -> float`` to a family registry."""
    if family not in _REGISTRY:
        raise ValueError(f"unknown feature family {family!r}")

    def deco(func):
        if name in _REGISTRY[family]:
            raise ValueError(f"feature {name!r} already registered for {family}")
        _REGISTRY[family][name] = FeatureSpec(name, family, definition, scale_power, func)
        return func

    return deco


def registry(family: str) -> list[FeatureSpec]:
    """Specs of a base family, in registration order."""
    return list(_REGISTRY[family].values())


def schema(family: str) -> list[FeatureSpec]:
    """Column specs of any family; combined names carry family prefixes."""
    if family == COMBINED:
        out = []
        for fam in (INFORMED, AGNOSTIC):
            for spec in registry(fam):
                out.append(FeatureSpec(PREFIX[fam] + spec.name, fam, spec.definition,
                                       spec.scale_power, spec.func))
        return out
    return registry(family)


def parse_family(value: str) -> str:
    if value in FAMILIES:
        return value
    try:
        return FAMILY_SLUGS[value]
    except KeyError:
        raise ValueError(f"unknown family {value!r}; use one of {sorted(FAMILY_SLUGS)}") from None


def family_slug(family: str) -> str:
    return {v: k for k, v in FAMILY_SLUGS.items()}[family]
