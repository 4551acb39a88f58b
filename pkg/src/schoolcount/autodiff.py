"""Reverse-mode automatic differentiation on numpy arrays.

A :class:`Tensor` wraps an ndarray and records how it was produced; calling
``backward()`` on a scalar result walks the recorded graph in reverse
topological order and accumulates exact gradients into every reachable
node.  The op set is intentionally small: elementwise arithmetic,
reductions, 2-D convolution (NHWC), batch normalization, slicing, and
matmul — everything the counting network and its losses need.

Arrays keep the dtype they were built with, so the same graph code runs in
float32 for training and float64 for finite-difference verification.
Non-Tensor operands (python scalars, ndarrays, lists) are treated as
constants and receive no gradient.
"""

import numpy as np

__all__ = [
    "Tensor", "as_tensor", "add", "sub", "mul", "neg", "absolute", "exp",
    "log", "relu", "tsum", "tmean", "reshape", "narrow", "matmul",
    "conv2d", "batchnorm_train", "batchnorm_eval",
]


class Tensor:
    """Node in the computation graph.

    ``parents`` are the Tensor operands; ``grad_fn(g)`` maps the gradient
    of the output to a tuple of gradients aligned with ``parents`` (entries
    may be None for constant operands).
    """

    __slots__ = ("data", "grad", "name", "_parents", "_grad_fn")

    def __init__(self, data, parents=(), grad_fn=None, name=None):
        self.data = np.asarray(data)
        self.grad = None
        self.name = name
        self._parents = tuple(parents)
        self._grad_fn = grad_fn

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data, name=self.name)

    # -- operators ---------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{tag})"

    # -- backward ----------------------------------------------------------
    def backward(self, grad=None):
        """Accumulate gradients of this (scalar) tensor into the graph."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without an explicit gradient "
                                 "requires a scalar tensor")
            grad = np.ones_like(self.data)
        self.grad = np.asarray(grad, dtype=self.data.dtype)
        for node in reversed(_topological_order(self)):
            if node._grad_fn is None or node.grad is None:
                continue
            for parent, g in zip(node._parents, node._grad_fn(node.grad)):
                if g is None:
                    continue
                if parent.grad is None:
                    parent.grad = g
                else:
                    parent.grad = parent.grad + g
        return self


def _topological_order(root):
    """Ancestors-first ordering of the graph rooted at ``root``."""
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return order


def as_tensor(x, dtype=None):
    """Wrap ``x`` in a Tensor (no-op when it already is one)."""
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _unbroadcast(grad, shape):
    """Reduce ``grad`` back to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _split(a, b):
    """Classify operands of a binary op into (tensor-or-None, raw data)."""
    at = a if isinstance(a, Tensor) else None
    bt = b if isinstance(b, Tensor) else None
    ad = a.data if at is not None else a
    bd = b.data if bt is not None else b
    return at, ad, bt, bd


def _binary(a, b, fwd, grad_a, grad_b):
    at, ad, bt, bd = _split(a, b)
    out = fwd(ad, bd)
    parents = tuple(t for t in (at, bt) if t is not None)

    def grad_fn(g):
        grads = []
        if at is not None:
            grads.append(_unbroadcast(grad_a(g, ad, bd), at.data.shape))
        if bt is not None:
            grads.append(_unbroadcast(grad_b(g, ad, bd), bt.data.shape))
        return tuple(grads)

    return Tensor(out, parents, grad_fn)


def add(a, b):
    return _binary(a, b, lambda x, y: x + y,
                   lambda g, x, y: g, lambda g, x, y: g)


def sub(a, b):
    return _binary(a, b, lambda x, y: x - y,
                   lambda g, x, y: g, lambda g, x, y: -g)


def mul(a, b):
    return _binary(a, b, lambda x, y: x * y,
                   lambda g, x, y: g * y, lambda g, x, y: g * x)


def neg(a):
    a = as_tensor(a)
    return Tensor(-a.data, (a,), lambda g: (-g,))


def absolute(a):
    """|a|, with subgradient 0 at exactly 0."""
    a = as_tensor(a)
    sign = np.sign(a.data)
    return Tensor(np.abs(a.data), (a,), lambda g: (g * sign,))


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.data)
    return Tensor(out, (a,), lambda g: (g * out,))


def log(a):
    a = as_tensor(a)
    return Tensor(np.log(a.data), (a,), lambda g: (g / a.data,))


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0
    return Tensor(np.where(mask, a.data, 0), (a,), lambda g: (g * mask,))


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)
    in_shape = a.data.shape

    def grad_fn(g):
        if axis is None:
            return (np.broadcast_to(g, in_shape),)
        axes = axis if isinstance(axis, tuple) else (axis,)
        axes = tuple(x % len(in_shape) for x in axes)
        if not keepdims:
            kept = [1 if i in axes else s for i, s in enumerate(in_shape)]
            g = g.reshape(kept)
        return (np.broadcast_to(g, in_shape),)

    return Tensor(out, (a,), grad_fn)


def tmean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    if axis is None:
        n = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        n = 1
        for x in axes:
            n *= a.data.shape[x % a.data.ndim]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def reshape(a, shape):
    a = as_tensor(a)
    in_shape = a.data.shape
    return Tensor(a.data.reshape(shape), (a,),
                  lambda g: (g.reshape(in_shape),))


def narrow(a, axis, start, length):
    """Contiguous slice of ``length`` entries along ``axis``."""
    a = as_tensor(a)
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)

    def grad_fn(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return Tensor(a.data[index], (a,), grad_fn)


def matmul(a, b):
    """2-D matrix product with gradients for both operands."""
    at, ad, bt, bd = _split(a, b)
    out = ad @ bd
    parents = tuple(t for t in (at, bt) if t is not None)

    def grad_fn(g):
        grads = []
        if at is not None:
            grads.append(g @ bd.T)
        if bt is not None:
            grads.append(ad.T @ g)
        return tuple(grads)

    return Tensor(out, parents, grad_fn)


# ---------------------------------------------------------------------------
# Convolution (NHWC activations, HWIO weights)
# ---------------------------------------------------------------------------

def _im2col(xp, kh, kw, stride):
    """Extract conv patches from a padded NHWC array.

    Returns a contiguous (N, OH, OW, KH, KW, C) array.
    """
    v = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    v = v[:, ::stride, ::stride]                      # (N, OH, OW, C, KH, KW)
    return np.ascontiguousarray(v.transpose(0, 1, 2, 4, 5, 3))


def _conv_input_grad(g, w, x_shape, stride, pad):
    """Gradient wrt the conv input, computed as a transposed convolution."""
    n, h, wdt, c = x_shape
    kh, kw, _, f = w.shape
    oh, ow = g.shape[1], g.shape[2]
    if stride > 1:
        gd = np.zeros((n, (oh - 1) * stride + 1, (ow - 1) * stride + 1, f),
                      dtype=g.dtype)
        gd[:, ::stride, ::stride] = g
    else:
        gd = g
    gp = np.pad(gd, ((0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1), (0, 0)))
    wf = np.ascontiguousarray(w[::-1, ::-1].transpose(0, 1, 3, 2))  # KH,KW,F,C
    cols = _im2col(gp, kh, kw, 1)
    hf, wff = cols.shape[1], cols.shape[2]            # (OH-1)s+KH, (OW-1)s+KW
    full = cols.reshape(-1, kh * kw * f) @ wf.reshape(kh * kw * f, c)
    full = full.reshape(n, hf, wff, c)
    gxp = np.zeros((n, h + 2 * pad, wdt + 2 * pad, c), dtype=g.dtype)
    gxp[:, :hf, :wff, :] = full
    if pad:
        return gxp[:, pad:pad + h, pad:pad + wdt, :]
    return gxp


def conv2d(x, w, stride=1, pad=0):
    """2-D cross-correlation of NHWC input with (KH, KW, C_in, C_out) weights."""
    x, w = as_tensor(x), as_tensor(w)
    xd, wd = x.data, w.data
    n, h, wdt, c = xd.shape
    kh, kw, cin, f = wd.shape
    if cin != c:
        raise ValueError(f"conv2d channel mismatch: input has {c}, "
                         f"weights expect {cin}")

    if kh == 1 and kw == 1 and pad == 0:
        # pointwise fast path (head and shortcut convolutions)
        xs = xd[:, ::stride, ::stride, :]
        oh, ow = xs.shape[1], xs.shape[2]
        xs2 = np.ascontiguousarray(xs).reshape(-1, c)
        out = (xs2 @ wd.reshape(c, f)).reshape(n, oh, ow, f)

        def grad_fn(g):
            gf = g.reshape(-1, f)
            gw = (xs2.T @ gf).reshape(1, 1, c, f)
            gxs = (gf @ wd.reshape(c, f).T).reshape(n, oh, ow, c)
            if stride == 1:
                return (gxs, gw)
            gx = np.zeros_like(xd)
            gx[:, ::stride, ::stride, :] = gxs
            return (gx, gw)

        return Tensor(out, (x, w), grad_fn)

    xp = np.pad(xd, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else xd
    cols = _im2col(xp, kh, kw, stride)
    oh, ow = cols.shape[1], cols.shape[2]
    cols2 = cols.reshape(n * oh * ow, kh * kw * c)
    out = (cols2 @ wd.reshape(kh * kw * c, f)).reshape(n, oh, ow, f)

    def grad_fn(g):
        gf = g.reshape(n * oh * ow, f)
        gw = (cols2.T @ gf).reshape(kh, kw, c, f)
        gx = _conv_input_grad(g, wd, xd.shape, stride, pad)
        return (gx, gw)

    return Tensor(out, (x, w), grad_fn)


# ---------------------------------------------------------------------------
# Batch normalization (per-channel over N, H, W)
# ---------------------------------------------------------------------------

def batchnorm_train(x, gamma, beta, eps=1e-5):
    """Batch-statistics normalization.

    Returns ``(out, batch_mean, batch_var)``; the caller owns the running
    estimates and their update rule.  Variance is the biased estimator.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    xd = x.data
    axes = (0, 1, 2)
    mu = xd.mean(axis=axes)
    var = xd.var(axis=axes)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mu) * inv
    out = xhat * gamma.data + beta.data
    m = xd.shape[0] * xd.shape[1] * xd.shape[2]

    def grad_fn(g):
        gbeta = g.sum(axis=axes)
        ggamma = (g * xhat).sum(axis=axes)
        gx = (gamma.data * inv / m) * (m * g - gbeta - xhat * ggamma)
        return (gx, ggamma, gbeta)

    return Tensor(out, (x, gamma, beta), grad_fn), mu, var


def batchnorm_eval(x, gamma, beta, mean, var, eps=1e-5):
    """Normalization against frozen running statistics."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv
    out = xhat * gamma.data + beta.data
    scale = gamma.data * inv

    def grad_fn(g):
        return (g * scale, (g * xhat).sum(axis=(0, 1, 2)),
                g.sum(axis=(0, 1, 2)))

    return Tensor(out, (x, gamma, beta), grad_fn)
