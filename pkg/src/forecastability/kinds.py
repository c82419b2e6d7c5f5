"""The four candidate forecasters and their tie-breaking order."""
from __future__ import annotations

import enum


class ModelKind(enum.IntEnum):
    """Candidate forecasters; the integer order breaks every tie (simpler wins)."""

    DailyNaive = 0
    WeeklyNaive = 1
    LinReg = 2
    GBM = 3

    def __str__(self):
        return self.name

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        try:
            return cls[str(value)]
        except KeyError:
            raise ValueError(f"unknown model kind {value!r}") from None


ALL_KINDS = tuple(ModelKind)
KIND_NAMES = tuple(k.name for k in ModelKind)


def label_sort_key(label):
    """Sort key placing ModelKind names in their fixed order, others after by name."""
    name = str(label)
    if name in KIND_NAMES:
        return (0, ModelKind[name].value, name)
    return (1, 0, name)
