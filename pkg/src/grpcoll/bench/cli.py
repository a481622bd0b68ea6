"""Command-line interface for experiments, data generation, and the
participant/coordinator runtime roles."""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from ..datasets import (
    data_dir,
    synth_gaussian_two_class,
    write_idx,
)
from ..nn import TrainConfig
from ..obfuscation import GrpScheme
from ..projection import generate_projection
from ..properties import dot_distance_check, reconstruction_check
from ..protocol.coordinator import CoordinatorServer
from ..protocol.participant import run_participant
from . import experiments


def _parse_address(value: str):
    host, _, port = value.rpartition(":")
    return host or "127.0.0.1", int(port)


@click.group()
def main():
    """Privacy-preserving collaborative learning workbench."""


_out_opt = click.option("--out", type=click.Path(), default="reports", show_default=True,
                        help="Directory for JSON/CSV reports.")
_seed_opt = click.option("--seed", type=int, default=0, show_default=True)
_smoke_opt = click.option("--smoke/--full", default=False, show_default=True,
                          help="Smoke preset: ~10% of samples, few epochs.")
_data_opt = click.option("--data-dir", type=click.Path(), default=None,
                         help="Dataset directory (default: $GRPC0LL_DATA_DIR).")


def _emit(report, out):
    json_path, csv_path = report.save(out)
    click.echo(f"wrote {json_path} and {csv_path}")
    for row in report.rows:
        click.echo(f"  {row}")


@main.command("gen-data")
@click.option("--out", type=click.Path(), default=None, help="Defaults to $GRPC0LL_DATA_DIR.")
@_seed_opt
def gen_data(out, seed):
    """Generate the synthetic two-class Gaussian datasets (and a small
    synthetic IDX pair usable for protocol smoke tests)."""
    base = Path(out) if out else data_dir()
    base.mkdir(parents=True, exist_ok=True)
    for name, d in (("toy2d", 2), ("toy10d", 10)):
        ds = synth_gaussian_two_class(d, 2.0, 3000, seed)
        with open(base / f"{name}.csv", "w") as f:
            for vec, label in zip(ds.vectors, ds.labels):
                f.write(",".join(f"{v:.8g}" for v in vec) + f",{label}\n")
        click.echo(f"wrote {base / (name + '.csv')}")
    rng = np.random.Generator(np.random.PCG64(seed))
    from ..datasets import Dataset

    n = 512
    vectors = rng.integers(0, 256, size=(n, 784)).astype(np.float64)
    labels = rng.integers(0, 10, size=n)
    synth = Dataset(vectors=vectors, labels=labels, class_count=10,
                    domain_bounds=np.stack([np.zeros(784), np.full(784, 255.0)]),
                    provenance="synth-idx")
    write_idx(synth, base / "synth-images-idx3-ubyte", base / "synth-labels-idx1-ubyte", 28, 28)
    click.echo(f"wrote synthetic IDX pair under {base}")


@main.command("exp-scaling")
@click.argument("dataset_id")
@click.option("--participants", "-n", "n_list", multiple=True, type=int, required=True)
@click.option("--scheme", default="grp", show_default=True)
@click.option("--rho", type=float, default=1.0, show_default=True)
@_out_opt
@_seed_opt
@_smoke_opt
@_data_opt
def cli_scaling(dataset_id, n_list, scheme, rho, out, seed, smoke, data_dir):
    """Accuracy vs number of participants."""
    report = experiments.exp_scaling(
        dataset_id, list(n_list), scheme_name=scheme, seed=seed, smoke=smoke,
        rho=rho, data_dir=data_dir,
    )
    _emit(report, out)


@main.command("exp-compression")
@click.argument("dataset_id")
@click.option("--rho", "rho_list", multiple=True, type=float, required=True)
@click.option("--participants", "-n", type=int, default=100, show_default=True)
@_out_opt
@_seed_opt
@_smoke_opt
@_data_opt
def cli_compression(dataset_id, rho_list, participants, out, seed, smoke, data_dir):
    """Accuracy vs compression ratio rho = d/k."""
    report = experiments.exp_compression(
        dataset_id, list(rho_list), N=participants, seed=seed, smoke=smoke,
        data_dir=data_dir,
    )
    _emit(report, out)


@main.command("exp-dp")
@click.argument("dataset_id")
@click.option("--epsilon", "epsilons", multiple=True, type=float)
@click.option("--scale", "scales", multiple=True, type=float,
              help="Fix the Laplace scale directly instead of deriving it from epsilon.")
@click.option("--participants", "-n", type=int, default=1, show_default=True)
@click.option("--png/--no-png", default=True, show_default=True,
              help="Emit a PNG grid of noise-added samples for image data.")
@_out_opt
@_seed_opt
@_smoke_opt
@_data_opt
def cli_dp(dataset_id, epsilons, scales, participants, png, out, seed, smoke, data_dir):
    """Accuracy vs differential-privacy loss (additive Laplace baseline)."""
    if not epsilons and not scales:
        raise click.UsageError("provide at least one --epsilon or --scale")
    report = experiments.exp_dp(
        dataset_id, list(epsilons) or None, list(scales) or None, N=participants,
        seed=seed, smoke=smoke, png_out=out if png else None, data_dir=data_dir,
    )
    _emit(report, out)


@main.command("exp-condition")
@click.option("--dimension", "-d", type=int, default=10, show_default=True)
@click.option("--condition", "conditions", multiple=True, type=float,
              default=(10, 30, 100, 300), show_default=True)
@_out_opt
@_seed_opt
@_smoke_opt
def cli_condition(dimension, conditions, out, seed, smoke):
    """Accuracy vs the projection matrix condition number."""
    report = experiments.exp_condition(
        d=dimension, condition_list=list(conditions), seed=seed, smoke=smoke
    )
    _emit(report, out)


@main.command("exp-attack")
@click.option("--dataset", "dataset_id", default="mnist", show_default=True)
@click.option("-k", type=int, default=783, show_default=True)
@click.option("--trials", type=int, default=10_000, show_default=True)
@_out_opt
@_seed_opt
@_data_opt
def cli_attack(dataset_id, k, trials, out, seed, data_dir):
    """Worst-case reconstruction variance accounting."""
    report = experiments.exp_attack(dataset_id, k=k, trials=trials, seed=seed, data_dir=data_dir)
    _emit(report, out)


@main.command("exp-overhead")
@click.option("--participants", "-n", type=int, default=14, show_default=True)
@click.option("--dataset", "dataset_id", default="mnist", show_default=True)
@click.option("--scheme", default="grp", show_default=True)
@_out_opt
@_seed_opt
@_smoke_opt
@_data_opt
def cli_overhead(participants, dataset_id, scheme, out, seed, smoke, data_dir):
    """Networked localhost run with wire-byte and wall-time accounting."""
    report = experiments.exp_overhead(
        N=participants, dataset_id=dataset_id, scheme_name=scheme, seed=seed,
        smoke=smoke, data_dir=data_dir,
    )
    _emit(report, out)


@main.command("serve")
@click.option("--bind", default="127.0.0.1:7001", show_default=True)
@click.option("--participants", "-n", type=int, required=True)
@click.option("--dataset", "dataset_id", default="mnist", show_default=True,
              help="Selects the model architecture and training config.")
@click.option("--timeout-secs", type=float, default=60.0, show_default=True)
@click.option("--epochs", type=int, default=None)
@_seed_opt
def cli_serve(bind, participants, dataset_id, timeout_secs, epochs, seed):
    """Run a coordinator: collect N shards, train, then answer classify requests."""
    model_id = {"mnist": "cnn", "spambase": "spam_mlp"}.get(dataset_id, "toy_mlp")
    config = TrainConfig(seed=seed)
    if epochs is not None:
        config.epochs = epochs
    server = CoordinatorServer(
        bind_address=_parse_address(bind),
        expected_participants=participants,
        model_builder=experiments.model_builder(model_id, seed),
        train_config=config,
        timeout_secs=timeout_secs,
    ).start()
    click.echo(f"coordinator listening on {server.address}")
    try:
        server.wait_trained(timeout=timeout_secs + 86_400)
        click.echo(
            f"trained on {server.report.samples_received} samples "
            f"({server.report.bytes_received} bytes) in {server.report.train_seconds:.1f}s; "
            "serving classification requests (Ctrl-C to stop)"
        )
        while True:
            import time

            time.sleep(1)
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()


@main.command("participate")
@click.option("--connect", default="127.0.0.1:7001", show_default=True)
@click.option("--images", type=click.Path(exists=True), required=True)
@click.option("--labels", type=click.Path(exists=True), required=True)
@click.option("--index", type=int, default=0, show_default=True, help="Participant index.")
@click.option("--count", type=int, required=True, help="Total participant count (for sharding).")
@click.option("-k", type=int, default=None, help="Projected dimension (default d).")
@click.option("--timeout-secs", type=float, default=60.0, show_default=True)
@_seed_opt
def cli_participate(connect, images, labels, index, count, k, timeout_secs, seed):
    """Run one participant: project the local shard and stream it."""
    from ..datasets import load_idx, normalize, shard

    ds = normalize(load_idx(images, labels))
    plan = shard(ds, count, seed=seed)
    my_shard = ds.subset(plan.indices_for(index))
    scheme = GrpScheme(k=k or ds.dimension, base_seed=seed)
    report = run_participant(
        _parse_address(connect), my_shard, obfuscation=scheme,
        participant_index=index, timeout_secs=timeout_secs,
    )
    click.echo(
        f"sent {report.samples_sent} samples / {report.bytes_sent} bytes "
        f"(obfuscation {report.obfuscation_seconds:.3f}s, "
        f"transfer {report.transfer_seconds:.3f}s)"
    )


@main.command("verify-properties")
@click.option("--trials", type=int, default=100_000, show_default=True)
@_seed_opt
def cli_verify(trials, seed):
    """Monte Carlo checks of the projection's statistical guarantees."""
    p1 = dot_distance_check(trials=trials, seed=seed)
    click.echo(
        f"dot/distance (k={p1['k']}, d={p1['d']}, {p1['trials']} keys): "
        f"{'PASS' if p1['ok'] else 'FAIL'}"
    )
    click.echo(f"  dot      mean {p1['dot']['mean']:+.5f} target {p1['dot']['target']:+.5f} "
               f"var {p1['dot']['variance']:.5f} bound {p1['dot']['variance_bound']:.5f}")
    click.echo(f"  distance mean {p1['distance']['mean']:+.5f} target {p1['distance']['target']:+.5f} "
               f"var {p1['distance']['variance']:.5f} bound {p1['distance']['variance_bound']:.5f}")
    p2 = reconstruction_check(trials=trials, seed=seed)
    click.echo(
        f"reconstruction (k={p2['k']}, d={p2['d']}, {p2['trials']} keys): "
        f"{'PASS' if p2['ok'] else 'FAIL'} "
        f"(max relative variance error {p2['max_rel_var_err']:.4f})"
    )
    if not (p1["ok"] and p2["ok"]):
        sys.exit(1)


if __name__ == "__main__":
    main()
