"""In-process equivalent of the networked shard -> obfuscate -> train -> test
flow, for desk-scale experiments without sockets."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..datasets import Dataset, concat, shard
from ..errors import EmptyDatasetError
from ..nn.network import evaluate, train


def _wire_quantize(ds: Dataset) -> Dataset:
    """Round vectors through float32, matching the socket path's wire format
    so simulated and networked runs train on identical bits."""
    return Dataset(
        vectors=ds.vectors.astype(np.float32).astype(np.float64),
        labels=ds.labels,
        class_count=ds.class_count,
        domain_bounds=ds.domain_bounds,
        provenance=ds.provenance + "|f32",
    )


@dataclass
class SimulationResult:
    mode: str
    accuracy: float  # collaborative accuracy, or mean over participants
    min_accuracy: float
    max_accuracy: float
    per_participant: list = field(default_factory=list)
    obfuscation_seconds: float = 0.0
    train_seconds: float = 0.0
    models: list = field(default_factory=list)
    history: object = None


def simulate(
    N: int,
    train_set: Dataset,
    test_set: Dataset,
    scheme,
    model_builder,
    train_config,
    mode: str = "collaborative",
    shard_seed: int = 0,
) -> SimulationResult:
    """Shard across N participants, obfuscate per participant, train, test.

    collaborative: one model on the union of obfuscated shards; each
    participant's test shard is obfuscated with that participant's stream.
    non_collaborative: one model per participant, tested on its own shard;
    min/mean/max accuracy reported.
    """
    if len(train_set) == 0 or len(test_set) == 0:
        raise EmptyDatasetError("need nonempty train and test sets")
    if mode not in ("collaborative", "non_collaborative"):
        raise ValueError(f"unknown mode {mode!r}")

    train_plan = shard(train_set, N, seed=shard_seed)
    test_plan = shard(test_set, N, seed=shard_seed + 1)

    obf_seconds = 0.0
    train_shards, test_shards = [], []
    for i in range(N):
        tr = train_set.subset(train_plan.indices_for(i))
        te = test_set.subset(test_plan.indices_for(i))
        started = time.perf_counter()
        obf_train = scheme.obfuscate(tr, i, phase=0)
        obf_test = scheme.obfuscate(te, i, phase=1)
        obf_seconds += time.perf_counter() - started
        train_shards.append(_wire_quantize(obf_train))
        test_shards.append(_wire_quantize(obf_test))

    k = train_shards[0].dimension
    cc = train_set.class_count

    if mode == "collaborative":
        union = concat(train_shards, provenance="simulated-assembly")
        model = model_builder(k, cc)
        started = time.perf_counter()
        _, history = train(model, union, train_config)
        train_seconds = time.perf_counter() - started
        per = [
            {"participant": i, "accuracy": evaluate(model, te)}
            for i, te in enumerate(test_shards)
        ]
        overall = evaluate(model, concat(test_shards, provenance="simulated-test"))
        accs = [p["accuracy"] for p in per]
        return SimulationResult(
            mode=mode,
            accuracy=overall,
            min_accuracy=min(accs),
            max_accuracy=max(accs),
            per_participant=per,
            obfuscation_seconds=obf_seconds,
            train_seconds=train_seconds,
            models=[model],
            history=history,
        )

    per, models = [], []
    train_seconds = 0.0
    for i in range(N):
        model = model_builder(k, cc)
        started = time.perf_counter()
        train(model, train_shards[i], train_config)
        train_seconds += time.perf_counter() - started
        acc = evaluate(model, test_shards[i])
        per.append({"participant": i, "accuracy": acc})
        models.append(model)
    accs = [p["accuracy"] for p in per]
    return SimulationResult(
        mode=mode,
        accuracy=sum(accs) / len(accs),
        min_accuracy=min(accs),
        max_accuracy=max(accs),
        per_participant=per,
        obfuscation_seconds=obf_seconds,
        train_seconds=train_seconds,
        models=models,
    )
