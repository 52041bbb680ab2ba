"""Shared test utilities, chiefly the finite-difference gradient oracle."""

from __future__ import annotations

import numpy as np

from alzdetect.autodiff import Parameter, Tape, backward

FD_STEP = 1e-5
FD_RTOL = 1e-4


def rel_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1e-5)


def gradcheck(build_loss, params: list[Parameter], coords_per_param: int | None = None,
              rng: np.random.Generator | None = None,
              step: float = FD_STEP, rtol: float = FD_RTOL) -> float:
    """Compare taped gradients against central finite differences.

    ``build_loss`` runs the forward pass (deterministically) and returns
    the scalar loss Tensor. Checks every coordinate of every parameter,
    or ``coords_per_param`` sampled coordinates when given. Returns the
    worst relative error seen; raises AssertionError past ``rtol``.
    """
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = build_loss()
        backward(tape, loss)
    analytic = {p.name: p.grad.copy() for p in params}

    worst = 0.0
    for p in params:
        flat = p.data.reshape(-1)
        n = flat.size
        if coords_per_param is None or coords_per_param >= n:
            idxs = range(n)
        else:
            idxs = (rng or np.random.default_rng(0)).choice(
                n, size=coords_per_param, replace=False)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + step
            hi = build_loss().item()
            flat[i] = orig - step
            lo = build_loss().item()
            flat[i] = orig
            numeric = (hi - lo) / (2 * step)
            a = analytic[p.name].reshape(-1)[i]
            err = rel_error(a, numeric)
            worst = max(worst, err)
            assert err < rtol, (
                f"{p.name}[{i}]: analytic {a:.10g} vs numeric {numeric:.10g} "
                f"(rel err {err:.3g})")
    return worst


def make_instances(cfg, n, rng, separation=0.0):
    """Random instances shaped for ``cfg``; optional label-correlated shift.

    Labels alternate 1/0; with ``separation`` > 0 the embeddings are
    mean-shifted by label and feature slot 0 carries the label outright,
    which makes the set linearly separable.
    """
    from alzdetect.lexical_features import EncodedInstance

    out = []
    for i in range(n):
        label = i % 2
        length = int(rng.integers(2, cfg.seq_len + 1))
        emb = rng.normal(size=(cfg.seq_len, cfg.embed_dim))
        if separation:
            emb += separation * (1.0 if label else -1.0)
        emb[length:] = 0.0
        pos = np.zeros((cfg.seq_len, cfg.pos_dim))
        pos[np.arange(cfg.seq_len),
            rng.integers(1, cfg.pos_dim, size=cfg.seq_len)] = 1.0
        pos[length:] = 0.0
        pos[length:, 0] = 1.0
        feats = rng.uniform(0.0, 1.0, size=7)
        if separation:
            feats[0] = float(label)
        mask = np.zeros(cfg.seq_len)
        mask[:length] = 1.0
        out.append(EncodedInstance(f"t{i}", f"p{i}", emb, pos, feats,
                                   mask, label))
    return out
