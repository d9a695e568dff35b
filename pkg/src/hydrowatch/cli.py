"""Command-line interface: training, evaluation, localization, scene
simulation, the HTTP service, and hyperparameter sweeps.

Report-producing commands write delimited output (CSV) together with
rendered figures (PNG) into the chosen output directory.
"""
from __future__ import annotations

import json
import time
from pathlib import Path

import click
import numpy as np

from . import evaluation as ev
from .audio import write_wav
from .corpus import build_corpus
from .dsp import export_csv, export_heatmap, stft, to_mel
from .localization import (ArrayGeometry, SearchSpec, TdoaMeasurement,
                           residual_surface, solve_position)
from .nnet import (TrainingConfig, ae_encode_batch, ae_train, load_model,
                   mlp_train, save_model)
from .simulate import CLASS_REGISTRY, EventSpec, Scene, render_scene

DEFAULT_GEOMETRY = {"H1": [50.0, 0.0], "H2": [0.0, 0.0], "H3": [-50.0, 0.0]}


def _figure(path, draw, figsize=(8, 4.5)):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=figsize)
    draw(ax, fig)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _corpus_options(fn):
    fn = click.option("--per-class", default=12, show_default=True,
                      help="samples per class")(fn)
    fn = click.option("--sample-rate", default=16_000, show_default=True)(fn)
    fn = click.option("--duration", default=1.0, show_default=True,
                      help="seconds per sample")(fn)
    fn = click.option("--bands", default=32, show_default=True,
                      help="Mel bands")(fn)
    fn = click.option("--seed", default=0, show_default=True)(fn)
    return fn


@click.group()
def main():
    """Hydrophone-array surveillance toolkit."""


@main.command("train-ae")
@_corpus_options
@click.option("--hidden", default=32, show_default=True)
@click.option("--dropout", default=0.2, show_default=True)
@click.option("--epochs", default=30, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--learning-rate", default=0.002, show_default=True)
@click.option("--out", type=click.Path(), default="models/autoencoder.hwm",
              show_default=True)
@click.option("--report-dir", type=click.Path(), default="reports",
              show_default=True)
def train_ae(per_class, sample_rate, duration, bands, seed, hidden, dropout,
             epochs, batch_size, learning_rate, out, report_dir):
    """Train the sequence autoencoder on a synthetic corpus."""
    corpus = build_corpus(per_class=per_class, sample_rate=sample_rate,
                          duration=duration, bands=bands, seed=seed)
    cfg = TrainingConfig(epochs=epochs, batch_size=batch_size,
                         learning_rate=learning_rate, seed=seed)
    t0 = time.time()
    model, history = ae_train([s.mel for s in corpus], cfg, hidden_size=hidden,
                              dropout_rate=dropout)
    click.echo(f"trained {epochs} epochs on {len(corpus)} samples "
               f"in {time.time() - t0:.1f}s; final loss {history[-1]:.5f}")
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    report = Path(report_dir)
    report.mkdir(parents=True, exist_ok=True)
    with open(report / "ae_training.csv", "w") as fh:
        fh.write("epoch,loss\n")
        fh.writelines(f"{i},{loss}\n" for i, loss in enumerate(history))

    def draw(ax, fig):
        ax.plot(history)
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean reconstruction RMSE")
        ax.set_title("autoencoder training loss")

    _figure(report / "ae_training.png", draw)
    click.echo(f"model -> {out}; report -> {report}/ae_training.csv,.png")


@main.command("train-mlp")
@click.option("--ae-model", type=click.Path(exists=True), required=True)
@_corpus_options
@click.option("--hidden", default=64, show_default=True)
@click.option("--epochs", default=150, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--learning-rate", default=0.003, show_default=True)
@click.option("--out", type=click.Path(), default="models/classifier.hwm",
              show_default=True)
@click.option("--report-dir", type=click.Path(), default="reports",
              show_default=True)
def train_mlp(ae_model, per_class, sample_rate, duration, bands, seed, hidden,
              epochs, batch_size, learning_rate, out, report_dir):
    """Train the latent-space classifier against a trained autoencoder."""
    ae = load_model(ae_model)
    corpus = build_corpus(per_class=per_class, sample_rate=sample_rate,
                          duration=duration, bands=bands, seed=seed)
    classes = sorted({s.label for s in corpus})
    idx = {c: i for i, c in enumerate(classes)}
    encodings = ae_encode_batch(ae, [s.mel for s in corpus])
    cfg = TrainingConfig(epochs=epochs, batch_size=batch_size,
                         learning_rate=learning_rate, optimizer="RMSPROP",
                         seed=seed)
    model, history = mlp_train(encodings, [idx[s.label] for s in corpus], cfg,
                               n_classes=len(classes), hidden_size=hidden)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    report = Path(report_dir)
    report.mkdir(parents=True, exist_ok=True)
    with open(report / "mlp_training.csv", "w") as fh:
        fh.write("epoch,loss\n")
        fh.writelines(f"{i},{loss}\n" for i, loss in enumerate(history))

    def draw(ax, fig):
        ax.plot(history)
        ax.set_xlabel("epoch")
        ax.set_ylabel("cross-entropy")
        ax.set_title("classifier training loss")

    _figure(report / "mlp_training.png", draw)
    click.echo(f"classes: {classes}")
    click.echo(f"model -> {out}; report -> {report}/mlp_training.csv,.png")


@main.command("evaluate")
@_corpus_options
@click.option("--splits", default=10, show_default=True)
@click.option("--test-fraction", default=0.3, show_default=True)
@click.option("--hidden", default=32, show_default=True)
@click.option("--epochs", default=30, show_default=True)
@click.option("--report-dir", type=click.Path(), default="reports",
              show_default=True)
def evaluate(per_class, sample_rate, duration, bands, seed, splits,
             test_fraction, hidden, epochs, report_dir):
    """Repeated-split comparison: AE+MLP pipeline vs nearest-neighbor baseline."""
    corpus = build_corpus(per_class=per_class, sample_rate=sample_rate,
                          duration=duration, bands=bands, seed=seed)
    classes = sorted({s.label for s in corpus})
    parts = ev.split_dataset(corpus, test_fraction, seed, repetitions=splits)
    ae_cfg = TrainingConfig(epochs=epochs, batch_size=32, learning_rate=0.002,
                            seed=seed)
    mlp_cfg = TrainingConfig(epochs=150, batch_size=32, learning_rate=0.003,
                             optimizer="RMSPROP", seed=seed)

    def ae_fn(train, test):
        return ev.train_and_predict_ae_mlp(train, test, ae_cfg, mlp_cfg, classes,
                                           hidden_size=hidden, mlp_hidden=64)

    def nn_fn(train, test):
        clf = ev.NearestNeighborClassifier(train)
        return [clf.predict(s.mel) for s in test]

    report = Path(report_dir)
    report.mkdir(parents=True, exist_ok=True)
    rows = ["method,balanced_accuracy,default_accuracy"]
    results = {}
    for name, fn in (("ae_mlp", ae_fn), ("nn_baseline", nn_fn)):
        t0 = time.time()
        rep = ev.evaluate_classifier(fn, parts, classes=classes)
        results[name] = rep
        rows.append(f"{name},{rep.balanced_accuracy},{rep.default_accuracy}")
        click.echo(f"{name}: balanced {rep.balanced_accuracy:.3f} "
                   f"default {rep.default_accuracy:.3f} ({time.time() - t0:.0f}s)")
        (report / f"confusion_{name}.csv").write_text(rep.to_csv())

        def draw(ax, fig, rep=rep, name=name):
            row_sums = rep.confusion.sum(axis=1, keepdims=True)
            im = ax.imshow(rep.confusion / np.maximum(row_sums, 1e-12),
                           cmap="viridis", vmin=0, vmax=1)
            ax.set_xticks(range(len(classes)))
            ax.set_yticks(range(len(classes)))
            ax.set_xticklabels(classes, rotation=90, fontsize=7)
            ax.set_yticklabels(classes, fontsize=7)
            ax.set_xlabel("predicted")
            ax.set_ylabel("reference")
            ax.set_title(f"{name} confusion (row-normalized)")
            fig.colorbar(im, ax=ax)

        _figure(report / f"confusion_{name}.png", draw, figsize=(7, 6))
    (report / "evaluation.csv").write_text("\n".join(rows) + "\n")
    click.echo(f"report -> {report}/evaluation.csv, confusion_*.csv, confusion_*.png")


@main.command("holdout")
@_corpus_options
@click.option("--holdout-class", "holdout_classes", multiple=True,
              help="repeatable; defaults to every minority class")
@click.option("--majority-class", "majority_classes", multiple=True,
              default=("normal_environmental_noise", "knocking_wood"),
              show_default=True)
@click.option("--majority-factor", default=3, show_default=True,
              help="majority classes get per-class x this many samples")
@click.option("--epochs", default=40, show_default=True)
@click.option("--hidden", default=16, show_default=True)
@click.option("--report-dir", type=click.Path(), default="reports",
              show_default=True)
def holdout(per_class, sample_rate, duration, bands, seed, holdout_classes,
            majority_classes, majority_factor, epochs, hidden, report_dir):
    """Leave-one-class-out anomaly detection: AE reconstruction error vs
    nearest-neighbor distance, scored by ROC AUC."""
    minority = [c for c in CLASS_REGISTRY if c not in majority_classes]
    corpus = build_corpus(minority, per_class=per_class, sample_rate=sample_rate,
                          duration=duration, bands=bands, seed=seed)
    corpus += build_corpus(list(majority_classes),
                           per_class=per_class * majority_factor,
                           sample_rate=sample_rate, duration=duration,
                           bands=bands, seed=seed + 1)
    targets = list(holdout_classes) or minority
    cfg = TrainingConfig(epochs=epochs, batch_size=32, learning_rate=0.002,
                         seed=seed)
    rows = ["holdout_class,auc_ae,auc_nn_baseline"]
    aucs = []
    for cls in targets:
        t0 = time.time()
        auc_ae, auc_nn = ev.holdout_experiment(
            corpus, cls, cfg, hidden_size=hidden, dropout_rate=0.2,
            test_fraction=0.3, majority_classes=majority_classes)
        rows.append(f"{cls},{auc_ae},{auc_nn}")
        aucs.append((cls, auc_ae, auc_nn))
        click.echo(f"{cls}: AE AUC {auc_ae:.3f}, baseline AUC {auc_nn:.3f} "
                   f"({time.time() - t0:.0f}s)")
    report = Path(report_dir)
    report.mkdir(parents=True, exist_ok=True)
    (report / "holdout.csv").write_text("\n".join(rows) + "\n")

    def draw(ax, fig):
        x = np.arange(len(aucs))
        ax.bar(x - 0.2, [a for _, a, _ in aucs], width=0.4, label="AE")
        ax.bar(x + 0.2, [b for _, _, b in aucs], width=0.4, label="NN baseline")
        ax.axhline(0.5, color="gray", linestyle="--", linewidth=1)
        ax.set_xticks(x)
        ax.set_xticklabels([c for c, _, _ in aucs], rotation=90, fontsize=7)
        ax.set_ylabel("ROC AUC")
        ax.set_title("holdout-class anomaly detection")
        ax.legend()

    _figure(report / "holdout.png", draw, figsize=(8, 5))
    click.echo(f"report -> {report}/holdout.csv,.png")


@main.command("localize")
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--report-dir", type=click.Path(), default="reports",
              show_default=True)
def localize(scenario, report_dir):
    """Solve a TDOA scenario file: geometry + reference + delays (JSON)."""
    data = json.loads(Path(scenario).read_text())
    geometry = ArrayGeometry(
        {k: tuple(v) for k, v in data.get("geometry", DEFAULT_GEOMETRY).items()},
        speed_of_sound=data.get("speed_of_sound", 1430.0))
    tdoa = TdoaMeasurement(reference=data["reference"],
                           delays={k: float(v) for k, v in data["delays"].items()})
    search = SearchSpec(range_m=data.get("range_m", 10.0),
                        grid_step=data.get("grid_step", 0.1))
    result = solve_position(tdoa, geometry, search)
    local = result.local_position(geometry)
    click.echo(f"region: {result.region.description}")
    click.echo(f"position (global): ({result.position[0]:.2f}, {result.position[1]:.2f}) m")
    click.echo(f"position (local to {result.region.anchor}): "
               f"({local[0]:.2f}, {local[1]:.2f}) m")
    click.echo(f"residual: {result.residual:.4f} m @ grid step {result.grid_step} m")
    report = Path(report_dir)
    report.mkdir(parents=True, exist_ok=True)
    name = Path(scenario).stem
    with open(report / f"localize_{name}.csv", "w") as fh:
        fh.write("x,y,local_x,local_y,residual,grid_step,region\n")
        fh.write(f"{result.position[0]},{result.position[1]},{local[0]},{local[1]},"
                 f"{result.residual},{result.grid_step},{result.region.description}\n")
    xs, ys, surface = residual_surface(tdoa, geometry, search)

    def draw(ax, fig):
        im = ax.pcolormesh(xs, ys, surface.T, cmap="magma", shading="auto")
        ax.plot(*result.position, "c+", markersize=12, label="estimate")
        for hid in geometry.positions:
            ax.plot(*geometry.position(hid), "w^")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_title(f"residual surface — {name}")
        ax.legend()
        fig.colorbar(im, ax=ax)

    _figure(report / f"localize_{name}.png", draw)
    click.echo(f"report -> {report}/localize_{name}.csv,.png")


@main.command("simulate")
@click.argument("scene_file", type=click.Path(exists=True))
@click.option("--sample-rate", default=16_000, show_default=True)
@click.option("--out-dir", type=click.Path(), default="rendered",
              show_default=True)
@click.option("--bit-depth", default=24, show_default=True)
def simulate(scene_file, sample_rate, out_dir, bit_depth):
    """Render a scene file (JSON) to per-hydrophone WAVs plus Mel heatmaps."""
    data = json.loads(Path(scene_file).read_text())
    geometry = ArrayGeometry(
        {k: tuple(v) for k, v in data.get("geometry", DEFAULT_GEOMETRY).items()},
        speed_of_sound=data.get("speed_of_sound", 1430.0))
    scene = Scene(
        geometry,
        [(EventSpec(e["class_id"], data.get("duration", 6.0),
                    e.get("seed", 0), e.get("loudness", 0.0)),
          tuple(e["position"]), e.get("onset", 0.0)) for e in data["events"]],
        duration=data.get("duration", 6.0),
        noise_floor=data.get("noise_floor", -60.0),
        seed=data.get("seed", 0))
    channels = render_scene(scene, sample_rate)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = Path(scene_file).stem
    for hid, seg in sorted(channels.items()):
        wav = out / f"{name}_{hid}.wav"
        write_wav(wav, seg.samples, sample_rate, bit_depth=bit_depth)
        mel = to_mel(stft(seg), bands=data.get("bands", 32))
        export_csv(mel.values, out / f"{name}_{hid}_mel.csv")
        export_heatmap(mel.values, out / f"{name}_{hid}_mel.png",
                       title=f"{name} — {hid}", ylabel="mel band")
        click.echo(f"{hid} -> {wav}")
    click.echo(f"figures -> {out}/{name}_*_mel.png")


@main.command("serve")
@click.option("--data-dir", type=click.Path(), default="service-data",
              show_default=True)
@click.option("--ae-model", type=click.Path(exists=True), required=True)
@click.option("--mlp-model", type=click.Path(exists=True), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(data_dir, ae_model, mlp_model, host, port):
    """Run the operator HTTP service."""
    import uvicorn

    from .api import create_app
    from .pipeline import PipelineModels

    models = PipelineModels(load_model(ae_model), load_model(mlp_model),
                            sorted(CLASS_REGISTRY))
    app = create_app(data_dir, models=models)
    uvicorn.run(app, host=host, port=port)


@main.command("sweep")
@click.argument("grid_file", type=click.Path(exists=True))
@click.option("--report-dir", type=click.Path(), default="reports",
              show_default=True)
def sweep(grid_file, report_dir):
    """Hyperparameter grid sweep over the repeated-split evaluation;
    emits a leaderboard sorted by balanced accuracy."""
    import itertools

    grid = json.loads(Path(grid_file).read_text())
    corpus_spec = grid.get("corpus", {})
    corpus = build_corpus(per_class=corpus_spec.get("per_class", 8),
                          sample_rate=corpus_spec.get("sample_rate", 16_000),
                          duration=corpus_spec.get("duration", 1.0),
                          bands=corpus_spec.get("bands", 32),
                          seed=corpus_spec.get("seed", 0))
    classes = sorted({s.label for s in corpus})
    parts = ev.split_dataset(corpus, corpus_spec.get("test_fraction", 0.3),
                             corpus_spec.get("seed", 0),
                             repetitions=grid.get("splits", 3))
    axes = grid.get("axes", {"hidden_size": [16, 32],
                             "learning_rate": [0.001, 0.002],
                             "epochs": [20, 30]})
    keys = sorted(axes)
    board = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        params = dict(zip(keys, combo))
        ae_cfg = TrainingConfig(epochs=int(params.get("epochs", 30)),
                                batch_size=int(params.get("batch_size", 32)),
                                learning_rate=float(params.get("learning_rate", 0.002)),
                                seed=corpus_spec.get("seed", 0))
        mlp_cfg = TrainingConfig(epochs=150, batch_size=32, learning_rate=0.003,
                                 optimizer="RMSPROP", seed=corpus_spec.get("seed", 0))
        t0 = time.time()
        rep = ev.evaluate_classifier(
            lambda train, test: ev.train_and_predict_ae_mlp(
                train, test, ae_cfg, mlp_cfg, classes,
                hidden_size=int(params.get("hidden_size", 32)), mlp_hidden=64),
            parts, classes=classes)
        board.append((rep.balanced_accuracy, rep.default_accuracy,
                      time.time() - t0, params))
        click.echo(f"{params}: balanced {rep.balanced_accuracy:.3f} "
                   f"({board[-1][2]:.0f}s)")
    board.sort(key=lambda r: -r[0])
    report = Path(report_dir)
    report.mkdir(parents=True, exist_ok=True)
    with open(report / "sweep.csv", "w") as fh:
        fh.write("rank,balanced_accuracy,default_accuracy,seconds," +
                 ",".join(keys) + "\n")
        for rank, (bal, dflt, secs, params) in enumerate(board, 1):
            fh.write(f"{rank},{bal},{dflt},{secs:.1f}," +
                     ",".join(str(params[k]) for k in keys) + "\n")

    def draw(ax, fig):
        labels = [", ".join(f"{k}={p[k]}" for k in keys) for _, _, _, p in board]
        ax.barh(range(len(board)), [b for b, _, _, _ in board])
        ax.set_yticks(range(len(board)))
        ax.set_yticklabels(labels, fontsize=7)
        ax.invert_yaxis()
        ax.set_xlabel("balanced accuracy")
        ax.set_title("hyperparameter sweep leaderboard")

    _figure(report / "sweep.png", draw, figsize=(8, 0.5 + 0.4 * len(board)))
    click.echo(f"leaderboard -> {report}/sweep.csv,.png")


if __name__ == "__main__":
    main()
