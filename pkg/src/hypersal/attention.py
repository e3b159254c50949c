"""Toy-scale forward passes of the gated-attention stack, with manual
backprop verified against finite differences.

Components: projection-free self-attention refinement with a skip
connection, a two-layer sigmoid gating head (1x1 convolutions realized as
per-token linear maps), attention whose values are reweighted by the gate,
and a pre-norm transformer block built around that attention. Everything
runs in float64 numpy; no training, no batching, single head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.special import erf

from .errors import ValidationError
from .types import SaliencyMap


@dataclass(frozen=True)
class FeatureMap:
    """Token matrix (N_t x C) with the spatial shape it unflattens to."""

    data: np.ndarray
    spatial: tuple[int, int]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValidationError("feature map must be (tokens, dim)")
        if not np.all(np.isfinite(data)):
            raise ValidationError("feature map contains non-finite values")
        h1, w1 = int(self.spatial[0]), int(self.spatial[1])
        if h1 * w1 != data.shape[0]:
            raise ValidationError(
                f"spatial {h1}x{w1} does not match {data.shape[0]} tokens"
            )
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spatial", (h1, w1))

    @property
    def tokens(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class GateMap:
    """Same layout as FeatureMap but every value strictly inside (0, 1)."""

    data: np.ndarray
    spatial: tuple[int, int]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValidationError("gate map must be (tokens, dim)")
        if data.min() <= 0.0 or data.max() >= 1.0:
            raise ValidationError("gate values must lie strictly in (0, 1)")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spatial", (int(self.spatial[0]), int(self.spatial[1])))


@dataclass
class GateParams:
    w_phi: np.ndarray
    b_phi: np.ndarray
    w_theta: np.ndarray
    b_theta: np.ndarray


@dataclass
class AttentionParams:
    w_q: np.ndarray
    b_q: np.ndarray
    w_k: np.ndarray
    b_k: np.ndarray
    w_v: np.ndarray
    b_v: np.ndarray


@dataclass
class BlockParams:
    ln1_gamma: np.ndarray
    ln1_beta: np.ndarray
    attn: AttentionParams
    ln2_gamma: np.ndarray
    ln2_beta: np.ndarray
    w_mlp1: np.ndarray
    b_mlp1: np.ndarray
    w_mlp2: np.ndarray
    b_mlp2: np.ndarray


@dataclass
class ToyParams:
    """All learnable tensors plus the seed they were drawn from."""

    seed: int
    dim: int
    spatial: tuple[int, int]
    gate: GateParams
    attn: AttentionParams
    blocks: list[BlockParams]
    pos_embed: np.ndarray = field(default=None)  # (tokens, dim)


def init_toy_params(
    spatial: tuple[int, int] = (4, 4),
    dim: int = 8,
    n_blocks: int = 4,
    seed: int = 0,
) -> ToyParams:
    """Seeded uniform(-0.1, 0.1) weights; layer-norm scales start at 1."""
    rng = np.random.default_rng(seed)
    tokens = spatial[0] * spatial[1]

    def u(*shape):
        return rng.uniform(-0.1, 0.1, size=shape)

    def make_attn():
        return AttentionParams(
            w_q=u(dim, dim), b_q=u(dim),
            w_k=u(dim, dim), b_k=u(dim),
            w_v=u(dim, dim), b_v=u(dim),
        )

    gate = GateParams(w_phi=u(dim, dim), b_phi=u(dim), w_theta=u(dim, dim), b_theta=u(dim))
    attn = make_attn()
    blocks = [
        BlockParams(
            ln1_gamma=np.ones(dim), ln1_beta=np.zeros(dim),
            attn=make_attn(),
            ln2_gamma=np.ones(dim), ln2_beta=np.zeros(dim),
            w_mlp1=u(dim, 4 * dim), b_mlp1=u(4 * dim),
            w_mlp2=u(4 * dim, dim), b_mlp2=u(dim),
        )
        for _ in range(n_blocks)
    ]
    return ToyParams(
        seed=seed, dim=dim, spatial=spatial, gate=gate, attn=attn,
        blocks=blocks, pos_embed=u(tokens, dim),
    )


# ---------------------------------------------------------------------------
# Primitive forwards/backwards


def softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _softmax_bwd(ds: np.ndarray, s: np.ndarray) -> np.ndarray:
    return s * (ds - (ds * s).sum(axis=1, keepdims=True))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    cdf = 0.5 * (1.0 + erf(x / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return cdf + x * pdf


_LN_EPS = 1e-6


def _layernorm_fwd(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray):
    mu = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + _LN_EPS)
    x_hat = (x - mu) * inv_std
    return x_hat * gamma + beta, (x_hat, inv_std)


def _layernorm_bwd(dy: np.ndarray, cache, gamma: np.ndarray):
    x_hat, inv_std = cache
    d_gamma = (dy * x_hat).sum(axis=0)
    d_beta = dy.sum(axis=0)
    dxh = dy * gamma
    dx = inv_std * (
        dxh
        - dxh.mean(axis=1, keepdims=True)
        - x_hat * (dxh * x_hat).mean(axis=1, keepdims=True)
    )
    return dx, d_gamma, d_beta


# ---------------------------------------------------------------------------
# Module forwards


def srgm_refine(f: FeatureMap) -> FeatureMap:
    """Projection-free self-attention with a skip connection."""
    out, _ = _srgm_refine_fwd(f.data)
    return FeatureMap(data=out, spatial=f.spatial)


def _srgm_refine_fwd(x: np.ndarray):
    scale = 1.0 / math.sqrt(x.shape[1])
    attn = softmax_rows(x @ x.T * scale)
    return x + attn @ x, (x, attn, scale)


def _srgm_refine_bwd(dout: np.ndarray, cache):
    x, attn, scale = cache
    dx = dout.copy()
    d_attn = dout @ x.T
    dx += attn.T @ dout
    dz = _softmax_bwd(d_attn, attn)
    dx += (dz @ x + dz.T @ x) * scale
    return dx


def srgm_gate(f_refined: FeatureMap, params: GateParams | ToyParams):
    """Two-layer gating head. Returns (GateMap, refinement SaliencyMap).

    The refinement map is the channel mean of the gate folded back to the
    spatial grid; it is the quantity supervised by the pseudo-label.
    """
    gp = params.gate if isinstance(params, ToyParams) else params
    g, _ = _srgm_gate_fwd(f_refined.data, gp)
    gate = GateMap(data=g, spatial=f_refined.spatial)
    g_ref = SaliencyMap(data=g.mean(axis=1).reshape(f_refined.spatial))
    return gate, g_ref


_GATE_EPS = 1e-12


def _srgm_gate_fwd(x: np.ndarray, gp: GateParams):
    h1 = x @ gp.w_phi + gp.b_phi
    r = np.maximum(h1, 0.0)
    h2 = r @ gp.w_theta + gp.b_theta
    # float64 saturates sigmoid to exactly 0/1 around |z| > 36; keep the
    # strictly-open range the gate promises
    g = np.clip(_sigmoid(h2), _GATE_EPS, 1.0 - _GATE_EPS)
    return g, (x, h1, r, g)


def _srgm_gate_bwd(dg: np.ndarray, cache, gp: GateParams):
    x, h1, r, g = cache
    dh2 = dg * g * (1.0 - g)
    d_w_theta = r.T @ dh2
    d_b_theta = dh2.sum(axis=0)
    dr = dh2 @ gp.w_theta.T
    dh1 = dr * (h1 > 0)
    d_w_phi = x.T @ dh1
    d_b_phi = dh1.sum(axis=0)
    dx = dh1 @ gp.w_phi.T
    return dx, {
        "w_phi": d_w_phi, "b_phi": d_b_phi,
        "w_theta": d_w_theta, "b_theta": d_b_theta,
    }


def guided_attention(
    f: FeatureMap, gate: GateMap, params: AttentionParams | ToyParams
) -> FeatureMap:
    """Self-attention whose value matrix is reweighted by the gate."""
    ap = params.attn if isinstance(params, ToyParams) else params
    if gate.data.shape != f.data.shape:
        raise ValidationError("gate shape must match feature shape")
    out, _ = _guided_attention_fwd(f.data, gate.data, ap)
    return FeatureMap(data=out, spatial=f.spatial)


def _guided_attention_fwd(x: np.ndarray, g: np.ndarray, ap: AttentionParams):
    scale = 1.0 / math.sqrt(x.shape[1])
    q = x @ ap.w_q + ap.b_q
    k = x @ ap.w_k + ap.b_k
    v = x @ ap.w_v + ap.b_v
    attn = softmax_rows(q @ k.T * scale)
    v_r = v * g
    out = attn @ v_r
    return out, (x, g, q, k, v, attn, v_r, scale)


def _guided_attention_bwd(dout: np.ndarray, cache, ap: AttentionParams):
    x, g, q, k, v, attn, v_r, scale = cache
    d_attn = dout @ v_r.T
    d_vr = attn.T @ dout
    dv = d_vr * g
    dg = d_vr * v
    dz = _softmax_bwd(d_attn, attn)
    dq = dz @ k * scale
    dk = dz.T @ q * scale
    dx = dq @ ap.w_q.T + dk @ ap.w_k.T + dv @ ap.w_v.T
    grads = {
        "w_q": x.T @ dq, "b_q": dq.sum(axis=0),
        "w_k": x.T @ dk, "b_k": dk.sum(axis=0),
        "w_v": x.T @ dv, "b_v": dv.sum(axis=0),
    }
    return dx, dg, grads


def sgab_forward(f: FeatureMap, gate: GateMap, params: BlockParams) -> FeatureMap:
    """Pre-norm transformer block with gated attention in the mixing slot."""
    if gate.data.shape != f.data.shape:
        raise ValidationError("gate shape must match feature shape")
    out, _ = _sgab_fwd(f.data, gate.data, params)
    return FeatureMap(data=out, spatial=f.spatial)


def _sgab_fwd(x: np.ndarray, g: np.ndarray, bp: BlockParams):
    n1, ln1_cache = _layernorm_fwd(x, bp.ln1_gamma, bp.ln1_beta)
    attn_out, attn_cache = _guided_attention_fwd(n1, g, bp.attn)
    x2 = x + attn_out
    n2, ln2_cache = _layernorm_fwd(x2, bp.ln2_gamma, bp.ln2_beta)
    h = n2 @ bp.w_mlp1 + bp.b_mlp1
    a = _gelu(h)
    m = a @ bp.w_mlp2 + bp.b_mlp2
    out = x2 + m
    return out, (x, g, ln1_cache, attn_cache, x2, ln2_cache, n2, h, a)


def _sgab_bwd(dout: np.ndarray, cache, bp: BlockParams):
    x, g, ln1_cache, attn_cache, x2, ln2_cache, n2, h, a = cache
    dm = dout
    d_w_mlp2 = a.T @ dm
    d_b_mlp2 = dm.sum(axis=0)
    da = dm @ bp.w_mlp2.T
    dh = da * _gelu_grad(h)
    d_w_mlp1 = n2.T @ dh
    d_b_mlp1 = dh.sum(axis=0)
    dn2 = dh @ bp.w_mlp1.T
    dx2_ln, d_ln2_gamma, d_ln2_beta = _layernorm_bwd(dn2, ln2_cache, bp.ln2_gamma)
    dx2 = dout + dx2_ln
    d_attn_out = dx2
    dn1, dg, attn_grads = _guided_attention_bwd(d_attn_out, attn_cache, bp.attn)
    dx_ln, d_ln1_gamma, d_ln1_beta = _layernorm_bwd(dn1, ln1_cache, bp.ln1_gamma)
    dx = dx2 + dx_ln
    grads = {
        "ln1_gamma": d_ln1_gamma, "ln1_beta": d_ln1_beta,
        "ln2_gamma": d_ln2_gamma, "ln2_beta": d_ln2_beta,
        "w_mlp1": d_w_mlp1, "b_mlp1": d_b_mlp1,
        "w_mlp2": d_w_mlp2, "b_mlp2": d_b_mlp2,
    }
    grads.update({f"attn.{k}": v for k, v in attn_grads.items()})
    return dx, dg, grads


def sgab_stack(f: FeatureMap, gate: GateMap, blocks: list[BlockParams]) -> FeatureMap:
    out = f
    for bp in blocks:
        out = sgab_forward(out, gate, bp)
    return out


def add_positional_embedding(f: FeatureMap, params: ToyParams | np.ndarray) -> FeatureMap:
    table = params.pos_embed if isinstance(params, ToyParams) else params
    if table.shape != f.data.shape:
        raise ValidationError(
            f"positional table {table.shape} does not match features {f.data.shape}"
        )
    return FeatureMap(data=f.data + table, spatial=f.spatial)


# ---------------------------------------------------------------------------
# Gradient checking


GRAD_CHECK_MODULES = (
    "srgm_refine",
    "srgm_gate",
    "guided_attention",
    "sgab",
    "positional_embedding",
)


def _params_as_dict(obj, prefix="") -> dict[str, np.ndarray]:
    out = {}
    for f_ in fields(obj):
        value = getattr(obj, f_.name)
        if isinstance(value, np.ndarray):
            out[prefix + f_.name] = value
        elif isinstance(value, (GateParams, AttentionParams)):
            out.update(_params_as_dict(value, prefix=prefix + f_.name + "."))
    return out


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / scale))


def _central_difference(loss_fn, arrays: dict[str, np.ndarray], h: float = 1e-5):
    grads = {}
    for name, arr in arrays.items():
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            hi = loss_fn()
            flat[idx] = orig - h
            lo = loss_fn()
            flat[idx] = orig
            gflat[idx] = (hi - lo) / (2.0 * h)
        grads[name] = g
    return grads


def grad_check(
    module: str,
    seed: int = 0,
    tokens: int = 4,
    dim: int = 3,
    corrupt: str | None = None,
    corrupt_delta: float = 0.1,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    The scalar readout is a fixed random weighting of the module output.
    `corrupt` names a gradient ("x", "gate", or a parameter key) to perturb
    by `corrupt_delta` before comparison; the harness must then report a
    large error, which is how its own sensitivity is verified.
    """
    if module not in GRAD_CHECK_MODULES:
        raise ValidationError(f"unknown module {module!r}")
    rng = np.random.default_rng(seed)
    spatial = (1, tokens)
    x = rng.uniform(-1.0, 1.0, size=(tokens, dim))
    readout = rng.uniform(-1.0, 1.0, size=(tokens, dim))
    params = init_toy_params(spatial=spatial, dim=dim, n_blocks=1, seed=seed + 1)
    gate_arr = _sigmoid(rng.uniform(-1.0, 1.0, size=(tokens, dim)))

    if module == "srgm_refine":
        arrays = {"x": x}

        def forward():
            out, cache = _srgm_refine_fwd(x)
            return out, cache

        def analytic():
            out, cache = forward()
            return {"x": _srgm_refine_bwd(readout, cache)}

    elif module == "srgm_gate":
        gp = params.gate
        arrays = {"x": x, **_params_as_dict(gp)}

        def forward():
            return _srgm_gate_fwd(x, gp)

        def analytic():
            _, cache = forward()
            dx, pgrads = _srgm_gate_bwd(readout, cache, gp)
            return {"x": dx, **pgrads}

    elif module == "guided_attention":
        ap = params.attn
        arrays = {"x": x, "gate": gate_arr, **_params_as_dict(ap)}

        def forward():
            return _guided_attention_fwd(x, gate_arr, ap)

        def analytic():
            _, cache = forward()
            dx, dg, pgrads = _guided_attention_bwd(readout, cache, ap)
            return {"x": dx, "gate": dg, **pgrads}

    elif module == "sgab":
        bp = params.blocks[0]
        arrays = {"x": x, "gate": gate_arr, **_params_as_dict(bp)}

        def forward():
            return _sgab_fwd(x, gate_arr, bp)

        def analytic():
            _, cache = forward()
            dx, dg, pgrads = _sgab_bwd(readout, cache, bp)
            return {"x": dx, "gate": dg, **pgrads}

    else:  # positional_embedding
        table = rng.uniform(-1.0, 1.0, size=(tokens, dim))
        arrays = {"x": x, "pos_embed": table}

        def forward():
            return x + table, None

        def analytic():
            return {"x": readout.copy(), "pos_embed": readout.copy()}

    def loss():
        out, _ = forward()
        return float((out * readout).sum())

    analytic_grads = analytic()
    if corrupt is not None:
        if corrupt not in analytic_grads:
            raise ValidationError(f"no gradient named {corrupt!r} to corrupt")
        analytic_grads[corrupt] = analytic_grads[corrupt].copy()
        analytic_grads[corrupt].flat[0] += corrupt_delta
    numeric_grads = _central_difference(loss, arrays)
    return max(
        _relative_error(analytic_grads[name], numeric_grads[name]) for name in arrays
    )


def run_all_checks(seed: int = 0) -> dict:
    """Gradient + invariant checks; the `toycheck` CLI serializes this."""
    results = []
    ok = True
    for module in GRAD_CHECK_MODULES:
        err = grad_check(module, seed=seed)
        passed = err < 1e-4
        ok = ok and passed
        results.append({"check": f"grad:{module}", "max_rel_error": err, "pass": passed})

    params = init_toy_params(seed=seed)
    rng = np.random.default_rng(seed)
    f = FeatureMap(
        data=rng.uniform(-1.0, 1.0, size=(16, params.dim)), spatial=(4, 4)
    )
    refined = srgm_refine(f)
    gate, _ = srgm_gate(refined, params)

    attn = softmax_rows(f.data @ f.data.T / math.sqrt(params.dim))
    row_sums_ok = bool(np.allclose(attn.sum(axis=1), 1.0, atol=1e-12))
    ok = ok and row_sums_ok
    results.append({"check": "softmax-rows-sum-to-1", "pass": row_sums_ok})

    gate_ok = bool(gate.data.min() > 0.0 and gate.data.max() < 1.0)
    ok = ok and gate_ok
    results.append({"check": "gate-strictly-inside-(0,1)", "pass": gate_ok})

    stacked = sgab_stack(f, gate, params.blocks)
    shape_ok = stacked.data.shape == f.data.shape
    ok = ok and shape_ok
    results.append({"check": "sgab-stack-preserves-shape", "pass": shape_ok})

    ident = guided_attention(f, GateMap(data=np.full_like(f.data, 1.0 - 1e-12), spatial=f.spatial), params)
    plain_q = f.data @ params.attn.w_q + params.attn.b_q
    plain_k = f.data @ params.attn.w_k + params.attn.b_k
    plain_v = f.data @ params.attn.w_v + params.attn.b_v
    plain = softmax_rows(plain_q @ plain_k.T / math.sqrt(params.dim)) @ plain_v
    ga_ok = bool(np.allclose(ident.data, plain, atol=1e-9))
    ok = ok and ga_ok
    results.append({"check": "unit-gate-reduces-to-self-attention", "pass": ga_ok})

    return {"seed": seed, "checks": results, "all_pass": ok}
