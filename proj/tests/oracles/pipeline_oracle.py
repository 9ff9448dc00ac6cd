#!/usr/bin/env python3
"""Dense brute-force reference for the mini-corpus pipeline.

Recomputes, from the raw fixtures and with no shared code:
  * the (role, word) pair counts after whitelist / label / frequency filters
  * plain and per-argument PPMI over dense matrices
  * the refined matrix: round half down, snapshot interpolation, round, square
  * OOV rows synthesized from embedding neighbors
  * word-similarity reports (sparse, svd rank 3, concat; OOV bench with and
    without synthesis) using scipy's Spearman

Writes tests/data/oracle/. The C++ suite compares its own output against
these files numerically.
"""

import json
import math
from collections import Counter, defaultdict
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

DATA = Path(__file__).resolve().parent.parent / "data"
OUT = DATA / "oracle"
MIN_COUNT = 2
THRESHOLD = 0.5
SVD_RANK = 3

CORE = {f"ARG{i}" for i in range(6)}
ADJ = {"ARGM-" + f for f in "LOC TMP MNR ADV DIS DIR CAU EXT PRP PRD GOL COM NEG MOD LVB REC ADJ".split()}


def load_whitelist():
    words = set()
    for line in (DATA / "verbs.txt").read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(line.lower())
    return words


def pairs_of_corpus(whitelist):
    pairs = []
    for line in (DATA / "mini_corpus.jsonl").read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        for fr in rec["frames"]:
            pred = fr["predicate_lemma"].lower()
            if pred not in whitelist:
                continue
            for arg in fr["args"]:
                if arg["label"] not in CORE and arg["label"] not in ADJ:
                    continue
                for tok in arg["head_tokens"]:
                    pairs.append(((pred, arg["label"]), tok.lower()))
    return pairs


def build_counts():
    pairs = pairs_of_corpus(load_whitelist())
    wf = Counter(w for _, w in pairs)
    rf = Counter(r for r, _ in pairs)
    words = sorted([w for w in wf if wf[w] >= MIN_COUNT], key=lambda w: (-wf[w], w))
    roles = sorted([r for r in rf if rf[r] >= MIN_COUNT])
    wi = {w: i for i, w in enumerate(words)}
    ri = {r: i for i, r in enumerate(roles)}
    W = np.zeros((len(words), len(roles)))
    for r, w in pairs:
        if w in wi and r in ri:
            W[wi[w], ri[r]] += 1
    return words, [wf[w] for w in words], roles, W


def ppmi_dense(W, roles, per_arg):
    """Counts are integers, so the PMI sign is decided exactly on the integer
    products #(w,r)*|C_a| vs #_a(w)*#(r) before any logarithm is taken."""
    M = np.zeros_like(W)
    groups = defaultdict(list)
    for j, (_, label) in enumerate(roles):
        groups[label if per_arg else "*"].append(j)
    for cols in groups.values():
        sub = W[:, cols].astype(np.int64)
        total = int(sub.sum())
        if total == 0:
            continue
        row_mass = sub.sum(axis=1)
        col_mass = sub.sum(axis=0)
        for i in range(sub.shape[0]):
            for k, j in enumerate(cols):
                c = int(sub[i, k])
                if c == 0:
                    continue
                num = c * total
                den = int(row_mass[i]) * int(col_mass[k])
                if num > den:
                    M[i, j] = math.log(num / den)
    return M


def load_vec(path):
    lines = path.read_text().splitlines()
    table = {}
    for line in lines[1:]:
        parts = line.split()
        table[parts[0]] = np.array([float(x) for x in parts[1:]])
    return table


def cos(u, v):
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))


def round_half_down(x):
    return np.ceil(x - 0.5)


def interpolate(R, words, emb, target, include_target):
    acc = np.zeros(R.shape[1])
    wsum = 0.0
    for i, w in enumerate(words):
        if w not in emb:
            continue
        a = 1.0 if w == target else cos(emb[target], emb[w])
        if w == target and not include_target:
            continue
        if a > THRESHOLD:
            acc += a * R[i]
            wsum += a
    if wsum == 0.0:
        return None
    return acc / wsum


def refine_dense(M, words, emb):
    R = round_half_down(M)
    out = np.zeros_like(M)
    for i, w in enumerate(words):
        row = interpolate(R, words, emb, w, True) if w in emb else R[i]
        out[i] = round_half_down(row) ** 2
    return out


def synth(M, words, emb, w):
    if w in words or w not in emb:
        return None
    row = interpolate(round_half_down(M), words, emb, w, False)
    if row is None:
        return None
    return round_half_down(row) ** 2


def load_bench(name):
    pairs = []
    for line in (DATA / name).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        a, b, s = line.split("\t")
        pairs.append((a.lower(), b.lower(), float(s)))
    return pairs


def report(pairs, vec_of, mode, grid=None):
    gold, pred, fails = [], [], 0
    for a, b, s in pairs:
        u, v = vec_of(a), vec_of(b)
        if u is None or v is None or not np.any(u) or not np.any(v):
            fails += 1
            continue
        gold.append(s)
        c = cos(u, v)
        if grid is not None:
            # np.round is half-even, like nearbyint under the default mode.
            c = float(np.round(c / grid) * grid)
        pred.append(c)
    rho = spearmanr(gold, pred).correlation
    return {"spearman": float(rho), "pairs_used": len(gold), "oov_failures": fails, "mode": mode}


def write_matrix(path, X):
    with open(path, "w") as f:
        for i in range(X.shape[0]):
            for j in range(X.shape[1]):
                if X[i, j] != 0.0:
                    f.write(f"{i}\t{j}\t{float(X[i, j])!r}\n")


def main():
    OUT.mkdir(exist_ok=True)
    words, wcounts, roles, W = build_counts()
    with open(OUT / "vocab.tsv", "w") as f:
        for i, (w, c) in enumerate(zip(words, wcounts)):
            f.write(f"{i}\t{w}\t{c}\n")
    with open(OUT / "roles.tsv", "w") as f:
        for j, (p, l) in enumerate(roles):
            f.write(f"{j}\t{p}\t{l}\t{int(W[:, j].sum())}\n")
    write_matrix(OUT / "counts.tsv", W)
    M = ppmi_dense(W, roles, per_arg=True)
    write_matrix(OUT / "ppmi_arg.tsv", M)
    write_matrix(OUT / "ppmi_plain.tsv", ppmi_dense(W, roles, per_arg=False))

    emb = load_vec(DATA / "mini_embeddings.vec")
    Mp = refine_dense(M, words, emb)
    write_matrix(OUT / "refined.tsv", Mp)

    index = {w: i for i, w in enumerate(words)}

    def sparse_vec(w):
        return Mp[index[w]] if w in index else None

    def sparse_or_synth(w):
        return Mp[index[w]] if w in index else synth(M, words, emb, w)

    U, S, Vt = np.linalg.svd(Mp, full_matrices=False)
    US = U[:, :SVD_RANK] * S[:SVD_RANK]

    def svd_vec(w):
        if w not in index or not np.any(Mp[index[w]]):
            return None
        v = US[index[w]]
        # Degenerate: the row lies (numerically) outside the top-k subspace.
        if np.linalg.norm(v) <= 1e-10 * np.linalg.norm(Mp[index[w]]):
            return None
        return v

    def concat_vec(w):
        if w not in index or w not in emb or not np.any(Mp[index[w]]):
            return None
        s = Mp[index[w]]
        d = emb[w]
        return np.concatenate([s / np.linalg.norm(s), d / np.linalg.norm(d)])

    bench = load_bench("mini_bench.tsv")
    oov = load_bench("oov_bench.tsv")
    reports = {
        "sparse": report(bench, sparse_vec, "sparse"),
        "svd": report(bench, svd_vec, "svd", grid=1e-9),
        "concat": report(bench, concat_vec, "concat"),
        "oov_plain": report(oov, sparse_vec, "sparse"),
        "oov_synth": report(oov, sparse_or_synth, "sparse"),
    }
    synth_rows = {}
    for w in ["kitten", "espresso", "mug", "surgeon", "tabloid", "zeppelin"]:
        r = synth(M, words, emb, w)
        synth_rows[w] = None if r is None else {str(j): float(r[j]) for j in np.nonzero(r)[0]}
    (OUT / "reports.json").write_text(json.dumps(reports, indent=2) + "\n")
    (OUT / "synth.json").write_text(json.dumps(synth_rows, indent=2, sort_keys=True) + "\n")
    print(f"|V|={len(words)} |R|={len(roles)} nnz(W)={int((W > 0).sum())} "
          f"nnz(M)={int((M > 0).sum())} nnz(M+)={int((Mp > 0).sum())}")
    print(json.dumps(reports, indent=1))


if __name__ == "__main__":
    main()
