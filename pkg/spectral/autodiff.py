"""
Reverse-mode gradients for the mixer block and models composed from it.

A forward pass is recorded on a ``Tape`` as a list of (name, vjp) closures;
``Tape.backward`` replays them in reverse. Complex cotangents follow the
convention g = dL/dRe + i dL/dIm throughout.

Per-step workflow:

    context = model.resolve(height, width)   # U, lambda built once per step
    tape = Tape()
    out = model.trace(x, tape, context)
    tape.backward(dloss_dout, grads)         # accumulates into grads
    model.finalize(grads, context)           # dU -> dtheta, dlambda -> dGamma
"""
import logging
from contextlib import contextmanager
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from .exceptions import NonFiniteError, ShapeError
from .fft import Axis, as_feature_map, irfft_lines, irfft_vjp, rfft_lines, rfft_vjp
from .mixer import (
    AxisMode, MixerParams, ResolvedAxis, UntiedParams, depthwise_conv3x3, gelu,
    gelu_grad, mixer_forward, resolve_axis,
)
from .operator import (
    GainMode, expm_frechet_block, matrix_exp, real_bin_mask, sigmoid, skew_generators,
)

logger = logging.getLogger(__name__)

FRECHET_MODES = ('directional', 'adjoint', 'fd')
FD_THETA_STEP = 1e-6
MAG_EPS = 1e-12

KNOWN_FAULTS = ('cw_sign_flip',)
_active_faults = set()


@contextmanager
def inject_fault(name: str):
    """
    Deliberately corrupt one adjoint while the context is open.

    ``cw_sign_flip`` negates the input cotangent of every width-channel pass.
    """
    if name not in KNOWN_FAULTS:
        raise ValueError(f"Unknown fault {name!r}; known: {', '.join(KNOWN_FAULTS)}")
    _active_faults.add(name)
    logger.warning(f"Fault '{name}' injected into the backward pass")
    try:
        yield
    finally:
        _active_faults.discard(name)


def fault_active(name: str) -> bool:
    return name in _active_faults


class ParamGradients(dict):
    """Gradient arrays keyed by parameter name, shaped like the parameters."""

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self:
            self[name] = self[name] + value
        else:
            self[name] = np.array(value, copy=True)

    def take(self, name: str, like: np.ndarray) -> np.ndarray:
        """Pop an accumulated intermediate, zeros if nothing flowed into it."""
        value = self.pop(name, None)
        if value is None:
            return np.zeros_like(like)
        return value

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(np.abs(g) ** 2)) for g in self.values())))


Vjp = Callable[[np.ndarray, ParamGradients], np.ndarray]


class Tape:
    """Ordered record of a forward pass."""

    def __init__(self):
        self._records: List[Tuple[str, Vjp]] = []

    def push(self, name: str, vjp: Vjp) -> None:
        self._records.append((name, vjp))

    def __len__(self) -> int:
        return len(self._records)

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self._records]

    def backward(self, grad: np.ndarray, grads: Optional[ParamGradients] = None) -> np.ndarray:
        """Replay the record in reverse; returns the cotangent of the tape input."""
        if grads is None:
            grads = ParamGradients()
        for name, vjp in reversed(self._records):
            grad = vjp(grad, grads)
            if not np.all(np.isfinite(grad)):
                raise NonFiniteError(f"Non-finite cotangent after '{name}'")
        return grad


# Traced primitives

def traced_axis_pass(x: np.ndarray, res: ResolvedAxis, tape: Tape, key: str) -> np.ndarray:
    dim = res.axis.dim
    n = res.n
    lines = np.moveaxis(rfft_lines(x, dim), dim, 0)
    u = res.u
    ut = np.swapaxes(u, -1, -2)
    coeff = np.matmul(lines, u)
    scaled = coeff * res.lam[:, None, :]
    mixed = np.matmul(scaled, ut)
    y = irfft_lines(np.moveaxis(mixed, 0, dim), n, dim)
    untied = u.ndim == 3

    def vjp(g, grads):
        g_mixed = np.moveaxis(irfft_vjp(g, n, dim), dim, 0)
        g_scaled = np.matmul(g_mixed, u)
        g_coeff = g_scaled * np.conj(res.lam)[:, None, :]
        g_lines = np.matmul(g_coeff, ut)

        d_lam = np.einsum('krc,krc->kc', np.conj(coeff), g_scaled)
        if res.mode is not GainMode.COMPLEX:
            d_lam = d_lam.real
        grads.add(f'{key}.lam', d_lam)

        if res.skew is not None:
            if untied:
                d_u = np.einsum('krj,kri->kji', np.conj(g_mixed), scaled).real
                d_u += np.einsum('kri,krj->kij', lines, np.conj(g_coeff)).real
            else:
                d_u = np.einsum('krj,kri->ji', np.conj(g_mixed), scaled).real
                d_u += np.einsum('kri,krj->ij', lines, np.conj(g_coeff)).real
            grads.add(f'{key}.U', d_u)

        g_x = rfft_vjp(np.moveaxis(g_lines, 0, dim), n, dim)
        if res.axis is Axis.WIDTH and fault_active('cw_sign_flip'):
            g_x = -g_x
        return g_x

    tape.push(f'{key}.pass', vjp)
    return y


def traced_linear(x: np.ndarray, weight: np.ndarray, bias: np.ndarray,
                  tape: Tape, key: str) -> np.ndarray:
    """Pointwise map over the channel axis; ``weight`` is [out, in]."""
    y = x @ weight.T + bias

    def vjp(g, grads):
        grads.add(f'{key}.weight', np.einsum('hwo,hwi->oi', g, x))
        grads.add(f'{key}.bias', g.sum(axis=(0, 1)))
        return g @ weight

    tape.push(key, vjp)
    return y


def traced_local_refine(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray,
                        tape: Tape, key: str) -> np.ndarray:
    pre = depthwise_conv3x3(x, kernel) + bias
    y = gelu(pre)

    def vjp(g, grads):
        g_pre = g * gelu_grad(pre)
        grads.add(f'{key}.bias', g_pre.sum(axis=(0, 1)))
        h, w = x.shape[:2]
        padded = np.pad(x, ((1, 1), (1, 1), (0, 0)))
        d_kernel = np.empty_like(kernel)
        for a in range(3):
            for b in range(3):
                d_kernel[a, b] = np.sum(g_pre * padded[a:a + h, b:b + w], axis=(0, 1))
        grads.add(f'{key}.kernel', d_kernel)
        return depthwise_conv3x3(g_pre, np.ascontiguousarray(kernel[::-1, ::-1, :]))

    tape.push(key, vjp)
    return y


def _branch(tape: Tape, key: str, branches: Iterable[Tape], skip: bool) -> None:
    branches = list(branches)

    def vjp(g, grads):
        total = g.copy() if skip else np.zeros_like(g)
        for branch in branches:
            total += branch.backward(g, grads)
        return total

    tape.push(key, vjp)


def traced_spectral_core(x: np.ndarray, resolved: Dict[str, ResolvedAxis],
                         axis_mode: AxisMode, tape: Tape, prefix: str = '') -> np.ndarray:
    ch, cw = resolved['ch'], resolved['cw']
    if axis_mode is AxisMode.CH_ONLY:
        return traced_axis_pass(x, ch, tape, f'{prefix}ch')
    if axis_mode is AxisMode.CW_ONLY:
        return traced_axis_pass(x, cw, tape, f'{prefix}cw')
    if axis_mode is AxisMode.CH_THEN_CW:
        return traced_axis_pass(traced_axis_pass(x, ch, tape, f'{prefix}ch'), cw, tape, f'{prefix}cw')
    if axis_mode is AxisMode.CW_THEN_CH:
        return traced_axis_pass(traced_axis_pass(x, cw, tape, f'{prefix}cw'), ch, tape, f'{prefix}ch')
    ch_tape, cw_tape = Tape(), Tape()
    y = traced_axis_pass(x, ch, ch_tape, f'{prefix}ch') + traced_axis_pass(x, cw, cw_tape, f'{prefix}cw')
    _branch(tape, f'{prefix}core.sum', (ch_tape, cw_tape), skip=False)
    return y


def resolve_block(params: MixerParams, height: int, width: int) -> Dict[str, ResolvedAxis]:
    return {
        'ch': resolve_axis(params.ch, params.variant, height),
        'cw': resolve_axis(params.cw, params.variant, width),
    }


def traced_mixer_block(x: np.ndarray, params: MixerParams, resolved: Dict[str, ResolvedAxis],
                       tape: Tape, prefix: str = '') -> np.ndarray:
    """Y = X + P_fuse(L(Phi(X))) with the residual add recorded as a branch."""
    branch = Tape()
    core = traced_spectral_core(x, resolved, params.axis_mode, branch, prefix)
    refined = traced_local_refine(core, params.refine.kernel, params.refine.bias,
                                  branch, f'{prefix}refine')
    fused = traced_linear(refined, params.fuse.weight, params.fuse.bias, branch, f'{prefix}fuse')
    _branch(tape, f'{prefix}residual', (branch,), skip=True)
    return x + fused


# Parameter-space conversion

def theta_gradient(skew: np.ndarray, d_u: np.ndarray, mode: str = 'directional') -> np.ndarray:
    """
    Map dL/dU to dL/dtheta through U = exp(A(theta)).

    ``skew`` / ``d_u`` are C x C (shared basis, returns P values) or K x C x C
    (untied, returns K x P).

    directional: dtheta_p = <dU, L(A, E_p)> with one augmented block
        exponential per generator E_p.
    adjoint: G = L(A^T, dU), dtheta_p = G_ij - G_ji for the packed (i, j).
    fd: central differences of exp along every generator.
    """
    if mode not in FRECHET_MODES:
        raise ValueError(f"Unknown Frechet mode {mode!r}; expected one of {FRECHET_MODES}")
    c = skew.shape[-1]
    gens = skew_generators(c)
    if gens.shape[0] == 0:
        return np.zeros(skew.shape[:-2] + (0,))
    untied = skew.ndim == 3
    if mode == 'adjoint':
        g = expm_frechet_block(np.swapaxes(skew, -1, -2), d_u)
        rows, cols = np.tril_indices(c, -1)
        return g[..., rows, cols] - g[..., cols, rows]
    a = skew[:, None] if untied else skew[None]
    if mode == 'directional':
        derivs = expm_frechet_block(a, gens[None] if untied else gens)
    else:
        derivs = (matrix_exp(a + FD_THETA_STEP * gens) - matrix_exp(a - FD_THETA_STEP * gens)) / (2 * FD_THETA_STEP)
    if untied:
        return np.einsum('kpij,kij->kp', derivs, d_u)
    return np.einsum('pij,ij->p', derivs, d_u)


def finalize_axis(params, res: ResolvedAxis, grads: ParamGradients, key: str,
                  frechet_mode: str = 'directional') -> None:
    """Turn the accumulated dU / dlambda of one axis into parameter gradients."""
    d_lam = grads.take(f'{key}.lam', res.lam)
    d_u = grads.take(f'{key}.U', res.u)

    if isinstance(params, UntiedParams):
        grads.add(f'{key}.theta', theta_gradient(res.skew, d_u, frechet_mode))
        grads.add(f'{key}.gamma', np.real(d_lam) * sigmoid(res.pre))
        return

    if res.skew is not None:
        grads.add(f'{key}.theta', theta_gradient(res.skew, d_u, frechet_mode))

    if res.mode is GainMode.SIGNED:
        d_pre = np.real(d_lam)
    elif res.mode is GainMode.POSITIVE:
        d_pre = np.real(d_lam) * sigmoid(res.pre)
    else:
        rotation = np.exp(1j * res.phase)
        d_mag = np.real(np.conj(rotation) * d_lam)
        d_phase = np.imag(np.conj(res.lam) * d_lam)
        # DC / Nyquist phases are pinned to zero in the forward pass.
        d_phase[real_bin_mask(res.n)] = 0.0
        d_pre = d_mag * sigmoid(res.pre)
        grads.add(f'{key}.phase', res.weights.T @ d_phase)
    grads.add(f'{key}.gamma', res.weights.T @ d_pre)


def finalize_block(params: MixerParams, resolved: Dict[str, ResolvedAxis],
                   grads: ParamGradients, prefix: str = '',
                   frechet_mode: str = 'directional') -> None:
    finalize_axis(params.ch, resolved['ch'], grads, f'{prefix}ch', frechet_mode)
    finalize_axis(params.cw, resolved['cw'], grads, f'{prefix}cw', frechet_mode)
    for name, arr in params.named_arrays():
        full = f'{prefix}{name}'
        if full not in grads:
            grads[full] = np.zeros_like(arr)


# Losses over a 2-channel (real, imaginary) output

def sse_loss(out: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """0.5 * ||out - target||^2 and its gradient."""
    diff = out - target
    return 0.5 * float(np.sum(diff * diff)), diff


def magnitude(out: np.ndarray) -> np.ndarray:
    return np.sqrt(out[..., 0] ** 2 + out[..., 1] ** 2 + MAG_EPS)


def _magnitude_backward(out: np.ndarray, mag: np.ndarray, d_mag: np.ndarray) -> np.ndarray:
    return np.stack([d_mag * out[..., 0] / mag, d_mag * out[..., 1] / mag], axis=-1)


def magnitude_l1_loss(out: np.ndarray, reference: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean absolute error between |out| and a reference magnitude image."""
    mag = magnitude(out)
    diff = mag - reference
    return float(np.mean(np.abs(diff))), _magnitude_backward(out, mag, np.sign(diff) / diff.size)


def magnitude_l2_loss(out: np.ndarray, reference: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean squared error between |out| and a reference magnitude image."""
    mag = magnitude(out)
    diff = mag - reference
    return float(np.mean(diff * diff)), _magnitude_backward(out, mag, 2.0 * diff / diff.size)


LOSSES = {'l1': magnitude_l1_loss, 'l2': magnitude_l2_loss, 'sse': sse_loss}


def value_and_grad(model, batch: List[Tuple[np.ndarray, np.ndarray]], loss='l1',
                   frechet_mode: str = 'directional') -> Tuple[float, ParamGradients]:
    """
    Mean loss over ``batch`` (pairs of input, target) and its exact gradients.

    ``model`` provides ``resolve(height, width)``, ``trace(x, tape, context)``
    and ``finalize(grads, context, frechet_mode)``.
    """
    if not batch:
        raise ShapeError("Empty batch")
    loss_fn = LOSSES[loss] if isinstance(loss, str) else loss
    height, width = batch[0][0].shape[:2]
    context = model.resolve(height, width)
    grads = ParamGradients()
    total = 0.0
    for x, target in batch:
        if x.shape[:2] != (height, width):
            raise ShapeError("Every batch element must share one spatial size")
        tape = Tape()
        out = model.trace(x, tape, context)
        value, g_out = loss_fn(out, target)
        total += value
        tape.backward(g_out / len(batch), grads)
    model.finalize(grads, context, frechet_mode)
    return total / len(batch), grads


class MixerModule:
    """A single mixer block exposed through the model protocol above."""

    def __init__(self, params: MixerParams):
        self.params = params

    def named_arrays(self) -> List[Tuple[str, np.ndarray]]:
        return self.params.named_arrays()

    def forward(self, x) -> np.ndarray:
        return mixer_forward(x, self.params)

    def resolve(self, height: int, width: int):
        return resolve_block(self.params, height, width)

    def trace(self, x, tape: Tape, context) -> np.ndarray:
        return traced_mixer_block(as_feature_map(x), self.params, context, tape)

    def finalize(self, grads: ParamGradients, context, frechet_mode: str = 'directional') -> None:
        finalize_block(self.params, context, grads, '', frechet_mode)
