"""Regenerate the small two-class benchmark fixtures under
crates/core/tests/fixtures/benchmark/ (UCR-style TSV: label, then values).

Usage: python3 tools/make_fixtures.py
"""
import os

import numpy as np

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "fixtures", "benchmark")


def cylinder_bell(rng, label, m):
    a = rng.integers(m // 8, m // 3)
    b = a + rng.integers(m // 4, m // 2)
    eta = rng.normal()
    t = np.arange(m)
    window = ((t >= a) & (t <= b)).astype(float)
    if label == 1:
        shape = window
    else:
        shape = window * (t - a) / (b - a)
    return (6 + eta) * shape + rng.normal(size=m)


def bump_or_dip(rng, label, m):
    centre = rng.integers(8, m - 8)
    t = np.arange(m)
    bump = np.exp(-0.5 * ((t - centre) / 2.0) ** 2) * 4.0
    base = 0.3 * rng.normal(size=m)
    return base + (bump if label == 1 else -bump)


def sine_square(rng, label, m):
    phase = rng.uniform(0, 2 * np.pi)
    t = np.arange(m)
    wave = np.sin(2 * np.pi * t / 16 + phase)
    if label == 2:
        wave = np.sign(wave)
    return 2.0 * wave + 0.3 * rng.normal(size=m)


def write(path, rows):
    with open(path, "w") as f:
        for label, values in rows:
            f.write(str(label) + "\t" + "\t".join(f"{v:.6f}" for v in values) + "\n")


def build(name, gen, m, n_train, n_test, seed):
    rng = np.random.default_rng(seed)
    d = os.path.join(OUT, name)
    os.makedirs(d, exist_ok=True)
    for split, n in (("TRAIN", n_train), ("TEST", n_test)):
        labels = [1 + (i % 2) for i in range(n)]
        rows = [(lab, gen(rng, lab, m)) for lab in labels]
        write(os.path.join(d, f"{name}_{split}.tsv"), rows)


if __name__ == "__main__":
    build("CylinderBell", cylinder_bell, 64, 30, 40, 11)
    build("BumpDip", bump_or_dip, 48, 24, 40, 12)
    build("SineSquare", sine_square, 48, 24, 40, 13)
