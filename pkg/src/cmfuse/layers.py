"""Network blocks with hand-derived gradients.

Forward path: token embedding -> BiLSTM -> masked max-pool -> dropout ->
linear projection, in parallel with a 6-step scalar-input LSTM over the
posting-time features -> dropout -> linear projection; the two projected
vectors are fused by a two-way modality attention gate and classified by
a dense softmax head.

Every block caches exactly what its backward pass needs, so one forward
trace supports exact analytic gradients for all 34 named tensors without
re-running the network. There is no autodiff tape; each backward function
is written against its forward definition.

Vectors are (n, 1) column matrices throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from . import optim
from .errors import UsageError
from .ndcore import RngState, ShapeError, init_glorot, matmul, sigmoid, softmax_row

GATES = ("f", "i", "o", "c")


@dataclass
class LstmParams:
    """One LSTM cell: four gate weight matrices and four bias columns.

    Each W_* is (hidden, hidden + input) and acts on the concatenation
    [h_prev; x_t]; each b_* is (hidden, 1).
    """

    W_f: np.ndarray
    W_i: np.ndarray
    W_o: np.ndarray
    W_c: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray

    @property
    def hidden(self) -> int:
        return self.W_f.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W_f.shape[1] - self.W_f.shape[0]

    def named(self, prefix: str):
        for g in GATES:
            yield f"{prefix}.W_{g}", getattr(self, f"W_{g}")
        for g in GATES:
            yield f"{prefix}.b_{g}", getattr(self, f"b_{g}")


@dataclass
class BiLstmParams:
    """Two same-shaped LSTMs run in opposite directions over one sequence."""

    forward: LstmParams
    backward: LstmParams


@dataclass
class AttentionParams:
    """Modality gate parameters.

    Each branch scores its input with w^T tanh(W z + b); both branches
    share the scoring dimension d_att.
    """

    W_text: np.ndarray
    b_text: np.ndarray
    W_time: np.ndarray
    b_time: np.ndarray
    w: np.ndarray

    def named(self, prefix: str):
        yield f"{prefix}.W_text", self.W_text
        yield f"{prefix}.b_text", self.b_text
        yield f"{prefix}.W_time", self.W_time
        yield f"{prefix}.b_time", self.b_time
        yield f"{prefix}.w", self.w


@dataclass
class ModelDims:
    """Mutually consistent sizes of every block."""

    vocab_rows: int
    embed_dim: int
    text_hidden: int
    time_hidden: int
    d_fuse: int
    d_att: int
    n_classes: int

    def validate(self):
        for f in fields(self):
            if getattr(self, f.name) < 1:
                raise UsageError(f"dimension {f.name} must be >= 1")


@dataclass
class ModelParams:
    """Every learnable tensor, enumerable as a flat ordered list of names.

    The enumeration order of ``named_tensors`` is the canonical tensor
    order used by the optimizer state and the checkpoint format.
    """

    embedding: np.ndarray          # (vocab_rows, embed_dim)
    text_bilstm: BiLstmParams
    time_lstm: LstmParams
    proj_text: np.ndarray          # (d_fuse, 2 * text_hidden)
    proj_time: np.ndarray          # (d_fuse, time_hidden)
    attention: AttentionParams
    W_output: np.ndarray           # (n_classes, d_fuse)
    b_output: np.ndarray           # (n_classes, 1)

    def named_tensors(self) -> list:
        out = [("embedding", self.embedding)]
        out += list(self.text_bilstm.forward.named("text_fwd"))
        out += list(self.text_bilstm.backward.named("text_bwd"))
        out += list(self.time_lstm.named("time"))
        out += [("proj_text", self.proj_text), ("proj_time", self.proj_time)]
        out += list(self.attention.named("attention"))
        out += [("output.W", self.W_output), ("output.b", self.b_output)]
        return out

    @property
    def dims(self) -> ModelDims:
        return ModelDims(
            vocab_rows=self.embedding.shape[0],
            embed_dim=self.embedding.shape[1],
            text_hidden=self.text_bilstm.forward.hidden,
            time_hidden=self.time_lstm.hidden,
            d_fuse=self.proj_text.shape[0],
            d_att=self.attention.w.shape[0],
            n_classes=self.W_output.shape[0],
        )


def _init_lstm(hidden: int, input_dim: int, rng: RngState) -> LstmParams:
    # forget-gate bias starts at 1 so early cell state is not erased
    kw = {}
    for g in GATES:
        kw[f"W_{g}"] = init_glorot(hidden, hidden + input_dim, rng.split(f"W_{g}"))
        kw[f"b_{g}"] = np.zeros((hidden, 1))
    kw["b_f"] = np.ones((hidden, 1))
    return LstmParams(**kw)


def init_model_params(dims: ModelDims, seed: int) -> ModelParams:
    """Glorot-uniform weights, zero biases, forget bias 1; fully seeded."""
    dims.validate()
    rng = RngState(seed).split("init")
    return ModelParams(
        embedding=init_glorot(dims.vocab_rows, dims.embed_dim, rng.split("embedding")),
        text_bilstm=BiLstmParams(
            forward=_init_lstm(dims.text_hidden, dims.embed_dim, rng.split("text_fwd")),
            backward=_init_lstm(dims.text_hidden, dims.embed_dim, rng.split("text_bwd")),
        ),
        time_lstm=_init_lstm(dims.time_hidden, 1, rng.split("time")),
        proj_text=init_glorot(dims.d_fuse, 2 * dims.text_hidden, rng.split("proj_text")),
        proj_time=init_glorot(dims.d_fuse, dims.time_hidden, rng.split("proj_time")),
        attention=AttentionParams(
            W_text=init_glorot(dims.d_att, dims.d_fuse, rng.split("att_W_text")),
            b_text=np.zeros((dims.d_att, 1)),
            W_time=init_glorot(dims.d_att, dims.d_fuse, rng.split("att_W_time")),
            b_time=np.zeros((dims.d_att, 1)),
            w=init_glorot(dims.d_att, 1, rng.split("att_w")),
        ),
        W_output=init_glorot(dims.n_classes, dims.d_fuse, rng.split("output_W")),
        b_output=np.zeros((dims.n_classes, 1)),
    )


def copy_model_params(params: ModelParams) -> ModelParams:
    """Deep copy of every tensor (used for snapshots and perturbation)."""

    def cp_lstm(p):
        return LstmParams(**{f.name: getattr(p, f.name).copy() for f in fields(LstmParams)})

    return ModelParams(
        embedding=params.embedding.copy(),
        text_bilstm=BiLstmParams(cp_lstm(params.text_bilstm.forward),
                                 cp_lstm(params.text_bilstm.backward)),
        time_lstm=cp_lstm(params.time_lstm),
        proj_text=params.proj_text.copy(),
        proj_time=params.proj_time.copy(),
        attention=AttentionParams(
            W_text=params.attention.W_text.copy(),
            b_text=params.attention.b_text.copy(),
            W_time=params.attention.W_time.copy(),
            b_time=params.attention.b_time.copy(),
            w=params.attention.w.copy(),
        ),
        W_output=params.W_output.copy(),
        b_output=params.b_output.copy(),
    )


def zero_grads(params: ModelParams) -> dict:
    return {name: np.zeros_like(arr) for name, arr in params.named_tensors()}


def params_fingerprint(params: ModelParams) -> str:
    """SHA-256 over all tensor bytes in canonical order."""
    import hashlib

    h = hashlib.sha256()
    for name, arr in params.named_tensors():
        h.update(name.encode())
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return h.hexdigest()


# --------------------------------------------------------------------------
# LSTM cell and sequence passes
# --------------------------------------------------------------------------

@dataclass
class GateCache:
    z: np.ndarray        # [h_prev; x_t]
    f: np.ndarray
    i: np.ndarray
    o: np.ndarray
    g: np.ndarray        # tanh candidate
    c_prev: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray


def lstm_cell(x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray,
              p: LstmParams):
    """One step of the gated recurrence.

        f, i, o = sigmoid(W_* [h_prev; x_t] + b_*)
        c_t = f * c_prev + i * tanh(W_c [h_prev; x_t] + b_c)
        h_t = o * tanh(c_t)

    Returns (h_t, c_t, cache); |h_t| < 1 elementwise always.
    """
    if x_t.shape != (p.input_dim, 1) or h_prev.shape != (p.hidden, 1):
        raise ShapeError(
            f"lstm_cell got x {x_t.shape}, h {h_prev.shape}; params expect "
            f"x ({p.input_dim}, 1), h ({p.hidden}, 1)")
    z = np.concatenate([h_prev, x_t], axis=0)
    f = sigmoid(matmul(p.W_f, z) + p.b_f)
    i = sigmoid(matmul(p.W_i, z) + p.b_i)
    o = sigmoid(matmul(p.W_o, z) + p.b_o)
    g = np.tanh(matmul(p.W_c, z) + p.b_c)
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return h, c, GateCache(z=z, f=f, i=i, o=o, g=g, c_prev=c_prev, c=c, tanh_c=tanh_c)


@dataclass
class LstmTrace:
    caches: list
    hidden: int
    input_dim: int


def lstm_forward(seq: list, p: LstmParams):
    """Run the cell over a sequence from zero initial state.

    Returns (all hidden states, final hidden state, trace).
    """
    if len(seq) == 0:
        raise UsageError("lstm_forward needs a non-empty sequence")
    h = np.zeros((p.hidden, 1))
    c = np.zeros((p.hidden, 1))
    hs = []
    caches = []
    for x_t in seq:
        h, c, cache = lstm_cell(x_t, h, c, p)
        hs.append(h)
        caches.append(cache)
    return hs, h, LstmTrace(caches=caches, hidden=p.hidden, input_dim=p.input_dim)


def lstm_backward(trace: LstmTrace, p: LstmParams, dh_seq: list):
    """Backpropagation through time for one direction.

    ``dh_seq[t]`` is the external gradient arriving at h_t (None for no
    gradient). Returns (grads keyed like LstmParams fields, dx per step).
    """
    T = len(trace.caches)
    H, D = trace.hidden, trace.input_dim
    grads = {f"W_{g}": np.zeros_like(getattr(p, f"W_{g}")) for g in GATES}
    grads.update({f"b_{g}": np.zeros_like(getattr(p, f"b_{g}")) for g in GATES})
    dx_seq = [None] * T
    dh_next = np.zeros((H, 1))
    dc_next = np.zeros((H, 1))
    for t in reversed(range(T)):
        cc = trace.caches[t]
        dh = dh_next if dh_seq[t] is None else dh_next + dh_seq[t]
        do = dh * cc.tanh_c
        dc = dc_next + dh * cc.o * (1.0 - cc.tanh_c ** 2)
        df = dc * cc.c_prev
        di = dc * cc.g
        dg = dc * cc.i
        dc_next = dc * cc.f
        da = {
            "f": df * cc.f * (1.0 - cc.f),
            "i": di * cc.i * (1.0 - cc.i),
            "o": do * cc.o * (1.0 - cc.o),
            "c": dg * (1.0 - cc.g ** 2),
        }
        dz = np.zeros_like(cc.z)
        for g in GATES:
            grads[f"W_{g}"] += matmul(da[g], cc.z.T)
            grads[f"b_{g}"] += da[g]
            dz += matmul(getattr(p, f"W_{g}").T, da[g])
        dh_next = dz[:H]
        dx_seq[t] = dz[H:]
    return grads, dx_seq


# --------------------------------------------------------------------------
# BiLSTM and masked pooling
# --------------------------------------------------------------------------

@dataclass
class BiLstmTrace:
    fwd: LstmTrace
    bwd: LstmTrace     # over the reversed sequence
    length: int


def bilstm_forward(emb_seq: list, mask: list, p: BiLstmParams):
    """Both directions over the same embeddings; H row t = [h_fwd_t; h_bwd_t].

    The backward half at position t equals a forward run (with the backward
    parameters) over the reversed sequence at position T-1-t. Padded
    positions run through the recurrences but are masked out of pooling.
    """
    T = len(emb_seq)
    if T == 0 or T != len(mask):
        raise UsageError(f"sequence length {T} and mask length {len(mask)} must match and be > 0")
    if not any(mask):
        raise UsageError("all-zero mask: no real tokens to encode")
    hs_f, _, tr_f = lstm_forward(emb_seq, p.forward)
    hs_b_rev, _, tr_b = lstm_forward(list(reversed(emb_seq)), p.backward)
    H = np.empty((T, 2 * p.forward.hidden))
    for t in range(T):
        H[t, :p.forward.hidden] = hs_f[t][:, 0]
        H[t, p.forward.hidden:] = hs_b_rev[T - 1 - t][:, 0]
    return H, BiLstmTrace(fwd=tr_f, bwd=tr_b, length=T)


def bilstm_backward(trace: BiLstmTrace, p: BiLstmParams, dH: np.ndarray):
    """Split dH by direction, BPTT each half, and sum the per-step dx."""
    T = trace.length
    hid = p.forward.hidden
    dh_f = [dH[t, :hid].reshape(-1, 1) for t in range(T)]
    dh_b_rev = [dH[T - 1 - j, hid:].reshape(-1, 1) for j in range(T)]
    grads_f, dx_f = lstm_backward(trace.fwd, p.forward, dh_f)
    grads_b, dx_b_rev = lstm_backward(trace.bwd, p.backward, dh_b_rev)
    dx_seq = [dx_f[t] + dx_b_rev[T - 1 - t] for t in range(T)]
    return grads_f, grads_b, dx_seq


def maxpool_masked(H: np.ndarray, mask: list):
    """Columnwise max over rows where mask == 1.

    Values at masked rows can never leak into the output. Returns the
    pooled column vector and, per feature, the original row index of the
    max (ties broken by lowest time index) for gradient routing.
    """
    keep = [t for t, m in enumerate(mask) if m]
    if not keep:
        raise UsageError("maxpool_masked needs at least one unmasked position")
    sub = H[keep]
    local = np.argmax(sub, axis=0)
    argmax_rows = np.array([keep[j] for j in local])
    cols = np.arange(H.shape[1])
    z = sub[local, cols].reshape(-1, 1)
    return z, argmax_rows


# --------------------------------------------------------------------------
# Modality attention gate
# --------------------------------------------------------------------------

def attention_weights_from_scores(s_text: float, s_time: float):
    """Convex weights from two raw scores, computed in log space.

    Normalizing exp(s_text) / (exp(s_text) + exp(s_time)) is the logistic
    of the score difference, which never overflows. The pair sums to 1 up
    to rounding and is invariant to shifting both scores equally.
    """
    a_text = float(sigmoid(s_text - s_time))
    a_time = float(sigmoid(s_time - s_text))
    return a_text, a_time


@dataclass
class AttentionTrace:
    z_text: np.ndarray
    z_time: np.ndarray
    u_text: np.ndarray
    u_time: np.ndarray
    alpha_text: float
    alpha_time: float


def cross_modal_attention(z_text: np.ndarray, z_time: np.ndarray,
                          p: AttentionParams):
    """Fuse two same-width embeddings by a learned two-way gate.

    Each modality is scored with w^T tanh(W z + b); the softmax over the
    two scores gives convex weights, and the output is the weighted sum
    of the inputs.
    """
    if z_text.shape != z_time.shape:
        raise ShapeError(f"modality widths differ: {z_text.shape} vs {z_time.shape}")
    u_text = np.tanh(matmul(p.W_text, z_text) + p.b_text)
    u_time = np.tanh(matmul(p.W_time, z_time) + p.b_time)
    s_text = matmul(p.w.T, u_text).item()
    s_time = matmul(p.w.T, u_time).item()
    a_text, a_time = attention_weights_from_scores(s_text, s_time)
    z_fused = a_text * z_text + a_time * z_time
    tr = AttentionTrace(z_text=z_text, z_time=z_time, u_text=u_text,
                        u_time=u_time, alpha_text=a_text, alpha_time=a_time)
    return z_fused, a_text, a_time, tr


def attention_backward(tr: AttentionTrace, p: AttentionParams,
                       d_fused: np.ndarray):
    """Gradients of the gate through the weight normalization.

    d(alpha)/d(score difference) = alpha_text * alpha_time, the logistic
    derivative.
    """
    d_alpha_text = matmul(d_fused.T, tr.z_text).item()
    d_alpha_time = matmul(d_fused.T, tr.z_time).item()
    d_diff = (d_alpha_text - d_alpha_time) * tr.alpha_text * tr.alpha_time
    ds_text, ds_time = d_diff, -d_diff

    dq_text = ds_text * p.w * (1.0 - tr.u_text ** 2)
    dq_time = ds_time * p.w * (1.0 - tr.u_time ** 2)

    grads = {
        "W_text": matmul(dq_text, tr.z_text.T),
        "b_text": dq_text,
        "W_time": matmul(dq_time, tr.z_time.T),
        "b_time": dq_time,
        "w": ds_text * tr.u_text + ds_time * tr.u_time,
    }
    dz_text = tr.alpha_text * d_fused + matmul(p.W_text.T, dq_text)
    dz_time = tr.alpha_time * d_fused + matmul(p.W_time.T, dq_time)
    return grads, dz_text, dz_time


# --------------------------------------------------------------------------
# Full model
# --------------------------------------------------------------------------

def dropout_mask(shape, rate: float, rng: RngState) -> np.ndarray:
    """Inverted-dropout mask: kept units scaled by 1/keep, so inference
    needs no rescaling. rate must be in [0, 1)."""
    if not 0.0 <= rate < 1.0:
        raise UsageError(f"dropout rate must be in [0, 1), got {rate}")
    keep = 1.0 - rate
    return (rng.random(shape) < keep).astype(np.float64) / keep


@dataclass
class ForwardTrace:
    """Everything the backward pass needs; nothing is recomputed."""

    token_ids: list
    mask: list
    bilstm: BiLstmTrace
    H: np.ndarray
    pool_argmax: np.ndarray
    pooled: np.ndarray            # pre-dropout pooled text vector
    text_keep: np.ndarray         # dropout mask (scaled), text branch
    v_text: np.ndarray            # post-dropout, input to proj_text
    time_trace: LstmTrace
    h_time: np.ndarray            # final temporal hidden, pre-dropout
    time_keep: np.ndarray
    v_time: np.ndarray
    z_text: np.ndarray
    z_time: np.ndarray
    attention: AttentionTrace
    z_fused: np.ndarray
    probs: np.ndarray
    mode: str


def model_forward(token_ids, mask, temporal_vec, params: ModelParams,
                  mode: str = "infer", rng: RngState = None,
                  dropout: float = 0.0):
    """End-to-end forward pass for one example.

    ``mode`` is "train" (dropout active, needs ``rng`` when rate > 0) or
    "infer" (deterministic pure function). Returns (probs, trace) where
    probs is a length-C vector summing to 1.
    """
    if mode not in ("train", "infer"):
        raise UsageError(f"mode must be 'train' or 'infer', got {mode!r}")
    dims = params.dims
    token_ids = list(token_ids)
    mask = list(mask)
    if len(token_ids) != len(mask):
        raise UsageError("token_ids and mask lengths differ")
    for tid in token_ids:
        if not 0 <= tid < dims.vocab_rows:
            raise UsageError(f"token id {tid} out of range for vocab of {dims.vocab_rows}")
    temporal = np.asarray(temporal_vec, dtype=np.float64).reshape(-1)

    emb_seq = [params.embedding[t].reshape(-1, 1) for t in token_ids]
    H, bitrace = bilstm_forward(emb_seq, mask, params.text_bilstm)
    pooled, argmax_rows = maxpool_masked(H, mask)

    if mode == "train" and dropout > 0.0:
        if rng is None:
            raise UsageError("train mode with dropout > 0 needs an rng")
        text_keep = dropout_mask(pooled.shape, dropout, rng.split("text_drop"))
        time_keep = dropout_mask((dims.time_hidden, 1), dropout, rng.split("time_drop"))
    else:
        text_keep = np.ones_like(pooled)
        time_keep = np.ones((dims.time_hidden, 1))

    v_text = pooled * text_keep
    z_text = matmul(params.proj_text, v_text)

    time_seq = [np.array([[x]]) for x in temporal]
    _, h_time, time_trace = lstm_forward(time_seq, params.time_lstm)
    v_time = h_time * time_keep
    z_time = matmul(params.proj_time, v_time)

    z_fused, _, _, att_trace = cross_modal_attention(z_text, z_time, params.attention)
    logits = matmul(params.W_output, z_fused) + params.b_output
    probs = softmax_row(logits.reshape(1, -1)).reshape(-1)

    trace = ForwardTrace(
        token_ids=token_ids, mask=mask, bilstm=bitrace, H=H,
        pool_argmax=argmax_rows, pooled=pooled, text_keep=text_keep,
        v_text=v_text, time_trace=time_trace, h_time=h_time,
        time_keep=time_keep, v_time=v_time, z_text=z_text, z_time=z_time,
        attention=att_trace, z_fused=z_fused, probs=probs, mode=mode,
    )
    return probs, trace


def model_backward(trace: ForwardTrace, params: ModelParams,
                   grad_logits: np.ndarray) -> dict:
    """Analytic gradients for every named tensor, from one forward trace.

    BPTT runs through both text directions and the temporal branch; the
    pool gradient is routed to each feature's recorded argmax position;
    the gate gradient passes through the two-way weight normalization;
    dropout masks from the forward pass are re-applied.
    """
    dims = params.dims
    gl = np.asarray(grad_logits, dtype=np.float64).reshape(-1, 1)
    if gl.shape[0] != dims.n_classes:
        raise ShapeError(f"grad_logits has {gl.shape[0]} entries, model has "
                         f"{dims.n_classes} classes")
    grads = {}

    # dense head
    grads["output.W"] = matmul(gl, trace.z_fused.T)
    grads["output.b"] = gl.copy()
    d_fused = matmul(params.W_output.T, gl)

    # modality gate
    att_grads, dz_text, dz_time = attention_backward(trace.attention,
                                                     params.attention, d_fused)
    for k, v in att_grads.items():
        grads[f"attention.{k}"] = v

    # projections, then dropout masks
    grads["proj_text"] = matmul(dz_text, trace.v_text.T)
    grads["proj_time"] = matmul(dz_time, trace.v_time.T)
    d_pooled = matmul(params.proj_text.T, dz_text) * trace.text_keep
    d_h_time = matmul(params.proj_time.T, dz_time) * trace.time_keep

    # pool routing: gradient goes only to each feature's argmax row
    dH = np.zeros_like(trace.H)
    dH[trace.pool_argmax, np.arange(trace.H.shape[1])] = d_pooled[:, 0]

    # text BPTT
    gf, gb, dx_seq = bilstm_backward(trace.bilstm, params.text_bilstm, dH)
    for g, arr in gf.items():
        grads[f"text_fwd.{g}"] = arr
    for g, arr in gb.items():
        grads[f"text_bwd.{g}"] = arr

    # embedding rows: scatter-add; ids absent from the sequence stay zero
    d_emb = np.zeros_like(params.embedding)
    for t, tid in enumerate(trace.token_ids):
        d_emb[tid] += dx_seq[t][:, 0]
    grads["embedding"] = d_emb

    # temporal BPTT: external gradient only at the final step
    T_time = len(trace.time_trace.caches)
    dh_seq = [None] * (T_time - 1) + [d_h_time]
    gt, _ = lstm_backward(trace.time_trace, params.time_lstm, dh_seq)
    for g, arr in gt.items():
        grads[f"time.{g}"] = arr

    return grads


# --------------------------------------------------------------------------
# Finite-difference gradient check
# --------------------------------------------------------------------------

def _check_inputs(dims: ModelDims, max_len: int, rng: RngState, n_examples: int):
    """Fixed random examples for the check; last position padded so the
    pool mask path is exercised."""
    examples = []
    for k in range(n_examples):
        r = rng.split("example", k)
        ids = [int(v) for v in r.integers(2, dims.vocab_rows, max_len)]
        mask = [1] * max_len
        if max_len > 1:
            ids[-1] = 0
            mask[-1] = 0
        temporal = r.random(6)
        label = int(r.integers(0, dims.n_classes))
        examples.append((ids, mask, temporal, label))
    return examples


def _batch_loss(params: ModelParams, examples) -> float:
    total = 0.0
    for ids, mask, temporal, label in examples:
        probs, _ = model_forward(ids, mask, temporal, params, mode="infer")
        total += optim.cross_entropy(probs, label)
    return total / len(examples)


def grad_check(dims: ModelDims, max_len: int = 5, seed: int = 0,
               eps: float = 1e-5, max_per_tensor: int = 200,
               n_examples: int = 2) -> dict:
    """Compare analytic gradients with central finite differences.

    For each named tensor, every scalar (or a seeded subsample of
    ``max_per_tensor``) is perturbed by +-eps under the mean cross-entropy
    of fixed examples, with dropout disabled. Reports the max relative
    error per tensor using |ga - gn| / max(|ga| + |gn|, 1e-12).
    """
    if not 1e-7 <= eps <= 1e-3:
        raise UsageError(f"eps must be in [1e-7, 1e-3], got {eps}")
    dims.validate()
    rng = RngState(seed).split("gradcheck")
    params = init_model_params(dims, seed)
    examples = _check_inputs(dims, max_len, rng, n_examples)

    analytic = zero_grads(params)
    for ids, mask, temporal, label in examples:
        probs, trace = model_forward(ids, mask, temporal, params,
                                     mode="train", dropout=0.0)
        gl = optim.ce_softmax_grad(probs, label)
        g = model_backward(trace, params, gl)
        for name in analytic:
            analytic[name] += g[name] / len(examples)

    report = {}
    for name, arr in params.named_tensors():
        flat = arr.reshape(-1)
        n = flat.shape[0]
        if n > max_per_tensor:
            idx = rng.split("subsample", name).choice(n, size=max_per_tensor)
        else:
            idx = np.arange(n)
        ga_flat = analytic[name].reshape(-1)
        worst = 0.0
        for j in idx:
            orig = flat[j]
            flat[j] = orig + eps
            lp = _batch_loss(params, examples)
            flat[j] = orig - eps
            lm = _batch_loss(params, examples)
            flat[j] = orig
            gn = (lp - lm) / (2.0 * eps)
            ga = ga_flat[j]
            rel = abs(ga - gn) / max(abs(ga) + abs(gn), 1e-12)
            worst = max(worst, rel)
        report[name] = worst
    return report
