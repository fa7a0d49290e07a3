#!/usr/bin/env python3
"""Train the 784-100-100-10 MNIST MLP and export it in the nnmon weight format.

Only used to regenerate tests/fixtures/mnist_mlp.json; the C++ library and its
test suites read the committed fixture and never call this script.

    python3 tools/train_fixture.py --train-images train-images-idx3-ubyte \
        --train-labels train-labels-idx1-ubyte \
        --test-images data/mnist/t10k-images-idx3-ubyte.gz \
        --test-labels data/mnist/t10k-labels-idx1-ubyte.gz \
        --out tests/fixtures/mnist_mlp.json
"""
import argparse
import gzip
import json
import struct
import sys

import numpy as np
import torch


def read_idx(path):
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rb") as f:
        data = f.read()
    magic = struct.unpack(">I", data[:4])[0]
    ndim = magic & 0xFF
    dims = struct.unpack(">" + "I" * ndim, data[4:4 + 4 * ndim])
    arr = np.frombuffer(data, dtype=np.uint8, offset=4 + 4 * ndim)
    return arr.reshape(dims)


def load(images, labels):
    x = read_idx(images).reshape(-1, 784).astype(np.float32) / 255.0
    y = read_idx(labels).astype(np.int64)
    return torch.from_numpy(x), torch.from_numpy(y)


def fmt(v):
    return float(np.format_float_positional(np.float32(v), unique=True, trim="-"))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--train-images", required=True)
    ap.add_argument("--train-labels", required=True)
    ap.add_argument("--test-images", required=True)
    ap.add_argument("--test-labels", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--lr", type=float, default=0.1)
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)

    xtr, ytr = load(args.train_images, args.train_labels)
    xte, yte = load(args.test_images, args.test_labels)

    model = torch.nn.Sequential(
        torch.nn.Linear(784, 100), torch.nn.ReLU(),
        torch.nn.Linear(100, 100), torch.nn.ReLU(),
        torch.nn.Linear(100, 10))
    opt = torch.optim.SGD(model.parameters(), lr=args.lr)
    gen = torch.Generator().manual_seed(args.seed)
    for epoch in range(args.epochs):
        perm = torch.randperm(len(xtr), generator=gen)
        for start in range(0, len(xtr), args.batch):
            idx = perm[start:start + args.batch]
            opt.zero_grad()
            loss = torch.nn.functional.cross_entropy(model(xtr[idx]), ytr[idx])
            loss.backward()
            opt.step()
        with torch.no_grad():
            acc = (model(xte).argmax(1) == yte).float().mean().item()
        print(f"epoch {epoch + 1}: test accuracy {acc:.4f}", file=sys.stderr)

    if acc < 0.97:
        print("accuracy below 0.97, not exporting", file=sys.stderr)
        return 1

    layers = []
    linears = [m for m in model if isinstance(m, torch.nn.Linear)]
    for i, lin in enumerate(linears):
        w = lin.weight.detach().numpy()
        b = lin.bias.detach().numpy()
        layers.append({
            "rows": int(w.shape[0]),
            "cols": int(w.shape[1]),
            "weights": [fmt(v) for v in w.reshape(-1)],
            "bias": [fmt(v) for v in b],
            "activation": "identity" if i == len(linears) - 1 else "relu",
        })
    doc = {"format": "nnmon-weights", "version": 1, "layers": layers}
    with open(args.out, "w") as f:
        json.dump(doc, f, separators=(",", ":"))
        f.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
