"""Gated graph convolution surrogate with thermal attention, in numpy.

Forward pass::

    r0   = tanh(W e + b)
    x_k  = sum over edge types t of  A_t r_{k-1} W_{k,t}^T
    r_k  = GRU(x_k, r_{k-1})                        k = 1..steps
    s_h  = tanh(W_enc r_steps[h] + b_enc)           per host node
    l_h  = relu(w_th2 . relu(W_th1 T_h + b_th1) + b_th2)
    a    = softmax over the hosts of each graph (l)
    O    = sigmoid(w_out . sum_h a_h s_h + b_out)

Gradients are derived by hand; see :meth:`GgcnModel.backward`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import NODE_FEATURES, THERMAL_FEATURES, GraphBatch

EDGE_TYPES = ("dep", "alloc")


class DimensionError(ValueError):
    pass


def sigmoid(x):
    # tanh form: overflow-free and faster than exp-based expressions
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def param_shapes(hidden: int, steps: int, node_features: int = NODE_FEATURES, thermal_features: int = THERMAL_FEATURES):
    d = hidden
    shapes = {
        "emb_w": (d, node_features),
        "emb_b": (d,),
    }
    for t in EDGE_TYPES:
        shapes[f"conv_{t}"] = (steps, d, d)
    for g in "zrn":
        shapes[f"gru_w{g}"] = (d, d)
        shapes[f"gru_u{g}"] = (d, d)
        shapes[f"gru_b{g}"] = (d,)
    shapes.update(
        enc_w=(d, d),
        enc_b=(d,),
        th1_w=(d, thermal_features),
        th1_b=(d,),
        th2_w=(d,),
        th2_b=(1,),
        out_w=(d,),
        out_b=(1,),
    )
    return shapes


def _is_bias(name: str) -> bool:
    return name.endswith("_b") or name.startswith("gru_b")


def _fans(name: str, shape: tuple[int, ...]) -> tuple[int, int]:
    if len(shape) == 3:
        return shape[2], shape[1]
    if len(shape) == 2:
        return shape[1], shape[0]
    # output vectors map d -> 1
    return shape[0], 1


@dataclass
class _Cache:
    batch: GraphBatch
    r: list
    m: list
    z: list
    rg: list
    n: list
    hs: np.ndarray
    s: np.ndarray
    t1: np.ndarray
    l_pre: np.ndarray
    alpha: np.ndarray
    ctx: np.ndarray
    out: np.ndarray


class GgcnModel:
    def __init__(self, hidden: int = 64, steps: int = 4, attention: bool = True, seed: int = 0,
                 node_features: int = NODE_FEATURES, thermal_features: int = THERMAL_FEATURES):
        self.hidden = hidden
        self.steps = steps
        self.attention = attention
        self.node_features = node_features
        self.thermal_features = thermal_features
        self.params: dict[str, np.ndarray] = {}
        rng = np.random.default_rng(seed)
        for name, shape in param_shapes(hidden, steps, node_features, thermal_features).items():
            if _is_bias(name):
                self.params[name] = np.zeros(shape)
            else:
                fan_in, fan_out = _fans(name, shape)
                limit = np.sqrt(6.0 / (fan_in + fan_out))
                self.params[name] = rng.uniform(-limit, limit, size=shape)

    def copy(self) -> "GgcnModel":
        other = GgcnModel.__new__(GgcnModel)
        other.__dict__.update(self.__dict__)
        other.params = {k: v.copy() for k, v in self.params.items()}
        return other

    def zero_(self) -> "GgcnModel":
        for v in self.params.values():
            v[...] = 0.0
        return self

    # ------------------------------------------------------------------ forward

    def _check(self, batch: GraphBatch) -> None:
        if batch.x.shape[1] != self.node_features:
            raise DimensionError(f"node features {batch.x.shape[1]} != model width {self.node_features}")
        if batch.thermal.shape != (len(batch.host_rows), self.thermal_features):
            raise DimensionError(f"thermal input {batch.thermal.shape} does not match hosts/model")
        if np.any(batch.host_counts < 1):
            raise DimensionError("every graph needs at least one host")

    def forward(self, batch: GraphBatch) -> tuple[np.ndarray, _Cache]:
        self._check(batch)
        p = self.params
        r = [np.tanh(batch.x @ p["emb_w"].T + p["emb_b"])]
        ms, zs, rgs, ns = [], [], [], []
        d = self.hidden
        # the three input-side gate products share one matmul
        w_in = np.concatenate([p["gru_wz"], p["gru_wr"], p["gru_wn"]]).T
        u_zr = np.concatenate([p["gru_uz"], p["gru_ur"]]).T
        b_zr = np.concatenate([p["gru_bz"], p["gru_br"]])
        for k in range(self.steps):
            prev = r[-1]
            m = np.zeros_like(prev)
            for t, adj in zip(EDGE_TYPES, batch.adj):
                if adj.nnz:
                    m += adj @ (prev @ p[f"conv_{t}"][k].T)
            gates_in = m @ w_in
            zr = sigmoid(gates_in[:, :2 * d] + prev @ u_zr + b_zr)
            z, rg = zr[:, :d], zr[:, d:]
            n = np.tanh(gates_in[:, 2 * d:] + (rg * prev) @ p["gru_un"].T + p["gru_bn"])
            r.append((1.0 - z) * n + z * prev)
            ms.append(m)
            zs.append(z)
            rgs.append(rg)
            ns.append(n)

        hs = r[-1][batch.host_rows]
        s = np.tanh(hs @ p["enc_w"].T + p["enc_b"])
        t1 = np.maximum(0.0, batch.thermal @ p["th1_w"].T + p["th1_b"])
        l_pre = t1 @ p["th2_w"] + p["th2_b"][0]
        logits = np.maximum(0.0, l_pre)
        offsets = batch.host_offsets
        if self.attention:
            peak = np.repeat(np.maximum.reduceat(logits, offsets), batch.host_counts)
            e = np.exp(logits - peak)
            alpha = e / np.repeat(np.add.reduceat(e, offsets), batch.host_counts)
        else:
            alpha = 1.0 / np.repeat(batch.host_counts, batch.host_counts).astype(float)
        ctx = np.add.reduceat(alpha[:, None] * s, offsets, axis=0)
        out = sigmoid(ctx @ p["out_w"] + p["out_b"][0])
        return out, _Cache(batch, r, ms, zs, rgs, ns, hs, s, t1, l_pre, alpha, ctx, out)

    def predict(self, batch: GraphBatch) -> np.ndarray:
        return self.forward(batch)[0]

    # ----------------------------------------------------------------- backward

    def backward(self, cache: _Cache, d_out: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of sum(d_out * O) with respect to every parameter."""
        p = self.params
        b = cache.batch
        g = {k: np.zeros_like(v) for k, v in p.items()}
        counts, offsets = b.host_counts, b.host_offsets

        dy = d_out * cache.out * (1.0 - cache.out)
        g["out_w"] = cache.ctx.T @ dy
        g["out_b"][0] = dy.sum()
        d_ctx = np.outer(dy, p["out_w"])
        d_ctx_h = np.repeat(d_ctx, counts, axis=0)

        d_s = cache.alpha[:, None] * d_ctx_h
        if self.attention:
            d_alpha = np.sum(cache.s * d_ctx_h, axis=1)
            weighted = np.repeat(np.add.reduceat(cache.alpha * d_alpha, offsets), counts)
            d_logit = cache.alpha * (d_alpha - weighted)
            d_lpre = d_logit * (cache.l_pre > 0)
            g["th2_w"] = cache.t1.T @ d_lpre
            g["th2_b"][0] = d_lpre.sum()
            d_t1 = np.outer(d_lpre, p["th2_w"]) * (cache.t1 > 0)
            g["th1_w"] = d_t1.T @ b.thermal
            g["th1_b"] = d_t1.sum(axis=0)

        d_spre = d_s * (1.0 - cache.s**2)
        g["enc_w"] = d_spre.T @ cache.hs
        g["enc_b"] = d_spre.sum(axis=0)
        d_r = np.zeros_like(cache.r[-1])
        np.add.at(d_r, b.host_rows, d_spre @ p["enc_w"])

        for k in reversed(range(self.steps)):
            prev, m, z, rg, n = cache.r[k], cache.m[k], cache.z[k], cache.rg[k], cache.n[k]
            d_prev = d_r * z
            d_n = d_r * (1.0 - z)
            d_z = d_r * (prev - n)

            d_npre = d_n * (1.0 - n**2)
            hr = rg * prev
            g["gru_wn"] += d_npre.T @ m
            g["gru_un"] += d_npre.T @ hr
            g["gru_bn"] += d_npre.sum(axis=0)
            d_m = d_npre @ p["gru_wn"]
            d_hr = d_npre @ p["gru_un"]
            d_prev += d_hr * rg
            d_rg = d_hr * prev

            d_rpre = d_rg * rg * (1.0 - rg)
            g["gru_wr"] += d_rpre.T @ m
            g["gru_ur"] += d_rpre.T @ prev
            g["gru_br"] += d_rpre.sum(axis=0)
            d_m += d_rpre @ p["gru_wr"]
            d_prev += d_rpre @ p["gru_ur"]

            d_zpre = d_z * z * (1.0 - z)
            g["gru_wz"] += d_zpre.T @ m
            g["gru_uz"] += d_zpre.T @ prev
            g["gru_bz"] += d_zpre.sum(axis=0)
            d_m += d_zpre @ p["gru_wz"]
            d_prev += d_zpre @ p["gru_uz"]

            for t, adj in zip(EDGE_TYPES, b.adj):
                if adj.nnz:
                    # adjacency is symmetric, so A^T = A
                    d_msg = adj @ d_m
                    w = p[f"conv_{t}"][k]
                    g[f"conv_{t}"][k] += d_msg.T @ prev
                    d_prev += d_msg @ w
            d_r = d_prev

        d_zemb = d_r * (1.0 - cache.r[0] ** 2)
        g["emb_w"] = d_zemb.T @ b.x
        g["emb_b"] = d_zemb.sum(axis=0)
        return g


class TrainingError(RuntimeError):
    pass


def loss_and_gradients(model: GgcnModel, batch: GraphBatch, targets: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared error over the batch and its parameter gradients."""
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (batch.n_graphs,):
        raise DimensionError("one target per graph required")
    if np.any((targets < 0) | (targets > 1)):
        raise ValueError("QoS targets must lie in [0, 1]")
    out, cache = model.forward(batch)
    err = out - targets
    mse = float(np.mean(err**2))
    if not np.isfinite(mse):
        raise TrainingError(f"non-finite loss (outputs {out!r})")
    grads = model.backward(cache, 2.0 * err / len(err))
    return mse, grads


class AdamW:
    """Adam with decoupled weight decay."""

    def __init__(self, lr: float = 1e-4, betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8, weight_decay: float = 0.01):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, w in params.items():
            gr = grads[name]
            m = self.m.setdefault(name, np.zeros_like(w))
            v = self.v.setdefault(name, np.zeros_like(w))
            m *= self.beta1
            m += (1.0 - self.beta1) * gr
            v *= self.beta2
            v += (1.0 - self.beta2) * gr * gr
            w *= 1.0 - lr * self.weight_decay
            w -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
