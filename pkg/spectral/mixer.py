"""
Axis-separable spectral core, the full mixer block, and the ablation cores.

    Y = X + P_fuse(L(Phi(X)))

Phi is the spectral core (CH pass, CW pass or a composition of both, selected
by ``AxisMode``), L a depthwise 3x3 convolution (zero padding 1) followed by an
exact GELU, and P_fuse a C -> C pointwise map. ``Variant`` swaps the per-axis
operator family used inside Phi and nothing else.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple, Union

import cv2
import numpy as np
from scipy.special import erf

from .exceptions import ShapeError
from .fft import (
    Axis, HalfSpectrum, as_feature_map, half_length, irfft_lines, naive_dft_axis,
    naive_idft_axis, rfft_lines,
)
from .operator import (
    AxisOperatorParams, GainMode, apply_spectral, basis_from_params, build_skew,
    identity_gain_raw, interpolate_gains, interpolation_matrix, matrix_exp,
    real_bin_mask, skew_generators, skew_size, softplus,
)

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    CHASM = 'Chasm'
    IDENTITY_BASIS = 'IdentityBasis'
    UNTIED_BASIS = 'UntiedBasis'
    SIGNED_GAIN = 'SignedGain'
    COMPLEX_GAIN = 'ComplexGain'

    @property
    def gain_mode(self) -> GainMode:
        if self is Variant.SIGNED_GAIN:
            return GainMode.SIGNED
        if self is Variant.COMPLEX_GAIN:
            return GainMode.COMPLEX
        return GainMode.POSITIVE

    @property
    def learns_basis(self) -> bool:
        return self is not Variant.IDENTITY_BASIS


class AxisMode(str, Enum):
    CH_ONLY = 'ChOnly'
    CW_ONLY = 'CwOnly'
    CH_THEN_CW = 'ChThenCw'
    CW_THEN_CH = 'CwThenCh'
    CH_PLUS_CW = 'ChPlusCw'


def parse_enum(enum_cls, value):
    """Accept an enum member, its value or its name, case-insensitively."""
    if isinstance(value, enum_cls):
        return value
    for member in enum_cls:
        if str(value).lower() in (member.value.lower(), member.name.lower()):
            return member
    choices = ', '.join(m.value for m in enum_cls)
    raise ShapeError(f"Unknown {enum_cls.__name__} {value!r}; expected one of {choices}")


@dataclass
class UntiedParams:
    """Per-frequency exponential coordinates and direct per-frequency gains."""
    thetas: np.ndarray
    gamma: np.ndarray
    axis: Axis = Axis.HEIGHT

    def __post_init__(self):
        self.axis = Axis.parse(self.axis)
        self.thetas = np.asarray(self.thetas, dtype=np.float64)
        self.gamma = np.asarray(self.gamma, dtype=np.float64)
        if self.gamma.ndim != 2 or self.thetas.ndim != 2:
            raise ShapeError("Untied parameters need K x P thetas and K x C gains")
        bins, channels = self.gamma.shape
        if self.thetas.shape != (bins, skew_size(channels)):
            raise ShapeError(
                f"Untied thetas must be {bins} x {skew_size(channels)}, got {self.thetas.shape}"
            )

    @property
    def channels(self) -> int:
        return self.gamma.shape[1]

    @property
    def bins(self) -> int:
        return self.gamma.shape[0]

    def parameter_count(self) -> int:
        return self.thetas.size + self.gamma.size

    @classmethod
    def identity(cls, signal_len: int, channels: int, axis=Axis.HEIGHT) -> 'UntiedParams':
        bins = half_length(signal_len)
        return cls(
            np.zeros((bins, skew_size(channels))),
            np.full((bins, channels), identity_gain_raw(GainMode.POSITIVE)),
            axis,
        )


AxisParams = Union[AxisOperatorParams, UntiedParams]


@dataclass
class RefineWeights:
    kernel: np.ndarray
    bias: np.ndarray

    @classmethod
    def identity(cls, channels: int) -> 'RefineWeights':
        kernel = np.zeros((3, 3, channels))
        kernel[1, 1, :] = 1.0
        return cls(kernel, np.zeros(channels))


@dataclass
class FuseWeights:
    """Pointwise C -> C map; ``weight`` is indexed [out, in]."""
    weight: np.ndarray
    bias: np.ndarray

    @classmethod
    def zeros(cls, channels: int) -> 'FuseWeights':
        return cls(np.zeros((channels, channels)), np.zeros(channels))


@dataclass
class MixerParams:
    ch: AxisParams
    cw: AxisParams
    refine: RefineWeights
    fuse: FuseWeights
    variant: Variant = Variant.CHASM
    axis_mode: AxisMode = AxisMode.CH_THEN_CW

    def __post_init__(self):
        self.variant = parse_enum(Variant, self.variant)
        self.axis_mode = parse_enum(AxisMode, self.axis_mode)
        c = self.ch.channels
        sizes = {
            'cw': self.cw.channels,
            'refine': self.refine.kernel.shape[-1],
            'fuse': self.fuse.weight.shape[0],
        }
        for name, size in sizes.items():
            if size != c:
                raise ShapeError(f"Channel count mismatch: ch has {c}, {name} has {size}")
        if self.refine.kernel.shape != (3, 3, c) or self.refine.bias.shape != (c,):
            raise ShapeError(f"Refine weights must be 3 x 3 x {c} plus {c} biases")
        if self.fuse.weight.shape != (c, c) or self.fuse.bias.shape != (c,):
            raise ShapeError(f"Fuse weights must be {c} x {c} plus {c} biases")
        if Axis.parse(self.ch.axis) is not Axis.HEIGHT or Axis.parse(self.cw.axis) is not Axis.WIDTH:
            raise ShapeError("MixerParams.ch must be tagged Height and .cw Width")
        check_variant_params(self.ch, self.variant)
        check_variant_params(self.cw, self.variant)

    @property
    def channels(self) -> int:
        return self.ch.channels

    @classmethod
    def initial(cls, channels: int, bins_h: int, bins_w: int,
                variant=Variant.CHASM, axis_mode=AxisMode.CH_THEN_CW,
                height: Optional[int] = None, width: Optional[int] = None) -> 'MixerParams':
        """
        Block-identity initialization: theta = 0, lambda = 1, centre-one refine
        kernel and zero fusion, so ``mixer_forward(x) == x`` exactly.
        """
        variant = parse_enum(Variant, variant)
        if variant is Variant.UNTIED_BASIS:
            if height is None or width is None:
                raise ShapeError("The untied variant needs the spatial size to size its tables")
            ch = UntiedParams.identity(height, channels, Axis.HEIGHT)
            cw = UntiedParams.identity(width, channels, Axis.WIDTH)
        else:
            ch = AxisOperatorParams.identity(channels, bins_h, Axis.HEIGHT, variant.gain_mode)
            cw = AxisOperatorParams.identity(channels, bins_w, Axis.WIDTH, variant.gain_mode)
        return cls(ch, cw, RefineWeights.identity(channels), FuseWeights.zeros(channels),
                   variant, axis_mode)

    @classmethod
    def random(cls, channels: int, bins_h: int, bins_w: int, rng: np.random.Generator,
               variant=Variant.CHASM, axis_mode=AxisMode.CH_THEN_CW,
               height: Optional[int] = None, width: Optional[int] = None,
               scale: float = 0.5) -> 'MixerParams':
        """A generic point: every trainable array perturbed away from the identity."""
        p = cls.initial(channels, bins_h, bins_w, variant, axis_mode, height, width)
        for _, arr in p.named_arrays():
            arr += scale * rng.standard_normal(arr.shape)
        return p

    def core_arrays(self) -> List[Tuple[str, np.ndarray]]:
        """Trainable spectral-core arrays in canonical order."""
        out = []
        for tag, axis_params in (('ch', self.ch), ('cw', self.cw)):
            if isinstance(axis_params, UntiedParams):
                out.append((f'{tag}.theta', axis_params.thetas))
                out.append((f'{tag}.gamma', axis_params.gamma))
                continue
            if self.variant.learns_basis:
                out.append((f'{tag}.theta', axis_params.skew.theta))
            out.append((f'{tag}.gamma', axis_params.gains.gamma))
            if axis_params.gains.phase is not None:
                out.append((f'{tag}.phase', axis_params.gains.phase))
        return out

    def wrapper_arrays(self) -> List[Tuple[str, np.ndarray]]:
        return [
            ('refine.kernel', self.refine.kernel),
            ('refine.bias', self.refine.bias),
            ('fuse.weight', self.fuse.weight),
            ('fuse.bias', self.fuse.bias),
        ]

    def named_arrays(self) -> List[Tuple[str, np.ndarray]]:
        """Every trainable array, canonical order: core (CH, CW), then wrapper."""
        return self.core_arrays() + self.wrapper_arrays()


def check_variant_params(params: AxisParams, variant: Variant) -> None:
    if variant is Variant.UNTIED_BASIS:
        if not isinstance(params, UntiedParams):
            raise ShapeError("The untied variant needs UntiedParams on both axes")
        return
    if isinstance(params, UntiedParams):
        raise ShapeError(f"Variant {variant.value} needs shared-basis AxisOperatorParams")
    has_phase = params.gains.phase is not None
    if has_phase != (variant is Variant.COMPLEX_GAIN):
        raise ShapeError(
            f"Variant {variant.value} {'needs' if not has_phase else 'does not use'} a phase table"
        )


@dataclass
class ResolvedAxis:
    """One axis operator instantiated for a concrete line length."""
    axis: Axis
    n: int
    mode: GainMode
    u: np.ndarray
    lam: np.ndarray
    skew: Optional[np.ndarray]
    pre: np.ndarray
    weights: Optional[np.ndarray]
    phase: Optional[np.ndarray]


def resolve_axis(params: AxisParams, variant: Variant, n: int) -> ResolvedAxis:
    """
    Build U (or the per-bin stack of U_k) and the K x C gains once; every
    bin and spatial position of the pass reuses them.
    """
    variant = parse_enum(Variant, variant)
    check_variant_params(params, variant)
    axis = Axis.parse(params.axis)
    k_bins = half_length(n)
    c = params.channels

    if isinstance(params, UntiedParams):
        if params.bins != k_bins:
            raise ShapeError(
                f"Untied {axis.value} tables have {params.bins} bins, input needs {k_bins}"
            )
        skew = np.tensordot(params.thetas, skew_generators(c), axes=1)
        u = matrix_exp(skew) if np.any(params.thetas) else np.broadcast_to(np.eye(c), skew.shape).copy()
        return ResolvedAxis(axis, n, GainMode.POSITIVE, u, softplus(params.gamma), skew,
                            params.gamma, None, None)

    mode = variant.gain_mode
    weights = interpolation_matrix(k_bins, params.gains.bins)
    pre = weights @ params.gains.gamma
    lam = interpolate_gains(params.gains, k_bins, mode, signal_len=n).lam
    phase = None
    if mode is GainMode.COMPLEX:
        phase = np.where(real_bin_mask(n)[:, None], 0.0, weights @ params.gains.phase)
    if variant.learns_basis:
        skew = build_skew(params.skew)
        u = basis_from_params(params.skew).u
    else:
        skew = None
        u = np.eye(c)
    return ResolvedAxis(axis, n, mode, u, lam, skew, pre, weights, phase)


def axis_pass(x: np.ndarray, resolved: ResolvedAxis, backend: str = 'fft') -> np.ndarray:
    """rFFT along the axis, mix every (bin, position), inverse rFFT."""
    dim = resolved.axis.dim
    if x.shape[dim] != resolved.n:
        raise ShapeError(f"Operator resolved for length {resolved.n}, input has {x.shape[dim]}")
    if backend == 'naive':
        spectrum = naive_dft_axis(x, resolved.axis).data
        mixed = apply_spectral(resolved.u, resolved.lam, spectrum, 0)
        return naive_idft_axis(HalfSpectrum(mixed, resolved.axis, resolved.n), resolved.n)
    spectrum = rfft_lines(x, dim)
    mixed = apply_spectral(resolved.u, resolved.lam, spectrum, dim)
    return irfft_lines(mixed, resolved.n, dim)


def _plane_pass(x, params, axis: Axis, variant, backend: str) -> np.ndarray:
    x = as_feature_map(x)
    if isinstance(params, MixerParams):
        variant = params.variant
        params = params.ch if axis is Axis.HEIGHT else params.cw
    if Axis.parse(params.axis) is not axis:
        raise ShapeError(f"{axis.value} pass got parameters tagged {Axis.parse(params.axis).value}")
    if variant is None:
        variant = Variant.UNTIED_BASIS if isinstance(params, UntiedParams) else (
            Variant.COMPLEX_GAIN if params.gains.phase is not None else Variant.CHASM)
    resolved = resolve_axis(params, variant, x.shape[axis.dim])
    return axis_pass(x, resolved, backend)


def ch_plane_pass(x, params, variant=None, backend: str = 'fft') -> np.ndarray:
    """Height-channel pass with M^CH(k_h) at every (k_h, w)."""
    return _plane_pass(x, params, Axis.HEIGHT, variant, backend)


def cw_plane_pass(x, params, variant=None, backend: str = 'fft') -> np.ndarray:
    """Width-channel pass with M^CW(k_w) at every (h, k_w)."""
    return _plane_pass(x, params, Axis.WIDTH, variant, backend)


def spectral_core(x, p: MixerParams, backend: str = 'fft') -> np.ndarray:
    """
    Dispatch on ``p.axis_mode``. ChPlusCw sums the two parallel passes, so the
    identity initialization maps x to 2x in that mode.
    """
    x = as_feature_map(x)
    mode = p.axis_mode
    if mode is AxisMode.CH_ONLY:
        return ch_plane_pass(x, p, backend=backend)
    if mode is AxisMode.CW_ONLY:
        return cw_plane_pass(x, p, backend=backend)
    if mode is AxisMode.CH_THEN_CW:
        return cw_plane_pass(ch_plane_pass(x, p, backend=backend), p, backend=backend)
    if mode is AxisMode.CW_THEN_CH:
        return ch_plane_pass(cw_plane_pass(x, p, backend=backend), p, backend=backend)
    return ch_plane_pass(x, p, backend=backend) + cw_plane_pass(x, p, backend=backend)


def variant_core(x, params: MixerParams, variant) -> np.ndarray:
    """Spectral core evaluated under an explicit variant tag."""
    variant = parse_enum(Variant, variant)
    if variant is not params.variant:
        check_variant_params(params.ch, variant)
        check_variant_params(params.cw, variant)
        params = MixerParams(params.ch, params.cw, params.refine, params.fuse,
                             variant, params.axis_mode)
    return spectral_core(x, params)


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    cdf = 0.5 * (1.0 + erf(x / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return cdf + x * pdf


def depthwise_conv3x3(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Per-channel 3x3 cross-correlation, zero padding 1, stride 1."""
    out = np.empty_like(x)
    for c in range(x.shape[-1]):
        out[:, :, c] = cv2.filter2D(
            np.ascontiguousarray(x[:, :, c]), cv2.CV_64F,
            np.ascontiguousarray(kernel[:, :, c]), borderType=cv2.BORDER_CONSTANT,
        )
    return out


def local_refine(x, weights: RefineWeights) -> np.ndarray:
    x = as_feature_map(x)
    return gelu(depthwise_conv3x3(x, weights.kernel) + weights.bias)


def fuse(x, weights: FuseWeights) -> np.ndarray:
    x = as_feature_map(x)
    return x @ weights.weight.T + weights.bias


def mixer_forward(x, p: MixerParams) -> np.ndarray:
    """Y = X + P_fuse(L(Phi(X)))."""
    x = as_feature_map(x)
    return x + fuse(local_refine(spectral_core(x, p), p.refine), p.fuse)


def core_parameter_count(p: MixerParams) -> int:
    """C(C-1) + (B_H + B_W) C for the default variant."""
    return sum(arr.size for _, arr in p.core_arrays())


def wrapper_parameter_count(p: MixerParams) -> int:
    return sum(arr.size for _, arr in p.wrapper_arrays())


def core_cost(height: int, width: int, channels: int, axis_mode=AxisMode.CH_THEN_CW) -> dict:
    """
    Operation-count estimate of one spectral-core evaluation: FFT work
    HWC log2(n) per pass, (other * K * C^2) channel mixing per pass and C^3
    for each basis construction.
    """
    axis_mode = parse_enum(AxisMode, axis_mode)
    use_h = axis_mode is not AxisMode.CW_ONLY
    use_w = axis_mode is not AxisMode.CH_ONLY
    hwc = height * width * channels
    fft = 0.0
    mixing = 0
    basis = 0
    if use_h:
        fft += hwc * math.log2(max(height, 2))
        mixing += width * half_length(height) * channels ** 2
        basis += channels ** 3
    if use_w:
        fft += hwc * math.log2(max(width, 2))
        mixing += height * half_length(width) * channels ** 2
        basis += channels ** 3
    return {'fft': fft, 'mixing': mixing, 'basis': basis, 'total': fft + mixing + basis}
