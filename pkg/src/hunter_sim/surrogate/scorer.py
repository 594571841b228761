"""Adapter letting the scheduler query a GGCN model on candidate allocations."""

from __future__ import annotations

import numpy as np

from ..model import DatacenterState
from .ggcn import GgcnModel
from .graph import HeteroGraph, Normalizer, build_graph, pack


class GgcnSurrogate:
    def __init__(self, model: GgcnModel, norm: Normalizer | None = None):
        self.model = model
        self.norm = norm

    def graph(self, state: DatacenterState) -> HeteroGraph:
        return build_graph(state, norm=self.norm)[0]

    def bind(self, state: DatacenterState):
        base = self.graph(state)
        index = {tid: i for i, tid in enumerate(base.task_ids)}

        def score(allocations: list[dict[int, int]]) -> np.ndarray:
            arrays = []
            for cand in allocations:
                a = np.full(base.n_tasks, -1, dtype=int)
                for tid, hid in cand.items():
                    i = index.get(tid)
                    if i is not None:
                        a[i] = hid
                arrays.append(a)
            return self.model.predict(pack([base] * len(arrays), arrays))

        return score
