#!/usr/bin/env python3
"""A miniature close-set experiment, end to end through the CLI.

Generates a 3-class dataset, splits it 50/50, trains a small dual-channel
model, evaluates on the held-out half, and renders the accuracy-vs-SNR
curve. Takes about a minute. Everything lands in ./demo_out/close_set.
"""

from pathlib import Path

from openmodrec.cli import run

OUT = Path("demo_out/close_set")
OUT.mkdir(parents=True, exist_ok=True)

steps = [
    ["generate", "--out", str(OUT / "ds.sigf"), "--classes", "BPSK,QPSK,GFSK",
     "--snr", "6:18:4", "--frames", "60", "--seed", "7"],
    ["split", "--data", str(OUT / "ds.sigf"), "--train-out", str(OUT / "train.sigf"),
     "--test-out", str(OUT / "test.sigf"), "--fraction", "0.5", "--seed", "7"],
    ["train", "--data", str(OUT / "train.sigf"), "--out", str(OUT / "run"),
     "--cells", "16", "--epochs", "25", "--batch", "64", "--lr", "0.003", "--seed", "7"],
    ["eval-close", "--model", str(OUT / "run" / "model.npz"),
     "--test", str(OUT / "test.sigf"), "--out", str(OUT / "eval")],
    ["plot", "--per-snr", str(OUT / "eval" / "per_snr.csv"), "--out", str(OUT / "plots")],
]

for argv in steps:
    print("$ openmodrec " + " ".join(argv))
    code = run(argv)
    if code != 0:
        raise SystemExit(code)
    print()

print("open", OUT / "plots" / "accuracy_vs_snr.svg", "in a browser to see the curve")
