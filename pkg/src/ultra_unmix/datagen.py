"""Synthetic scenes: endmember spectra, abundance maps, noisy cubes.

Everything is driven by a single scene seed.  Independent substreams are
derived per stage (0 endmembers, 1 abundances, 2 noise) so regenerating a
scene with a different SNR reuses the identical geometry.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import gaussian_filter, gaussian_filter1d

from .exceptions import GenerationError, ParameterError
from .tensor_ops import as_tensor3, mode_k_product

__all__ = ["PATTERNS", "SceneSpec", "GroundTruth", "max_pairwise_cosine",
           "gen_endmembers", "gen_abundances", "add_noise", "gen_scene",
           "spatial_autocorr_lag1"]

PATTERNS = ("gauss-fields", "blocks", "bumps")


@dataclass
class SceneSpec:
    """Parameters of a synthetic scene."""

    rows: int
    cols: int
    n_endmembers: int
    n_bands: int
    pattern: str = "gauss-fields"
    smoothness: float = 3.0
    endmember_coherence: float = 0.8
    snr_db: float = 25.0
    seed: int = 0

    def validate(self):
        if min(self.rows, self.cols, self.n_endmembers, self.n_bands) < 1:
            raise ParameterError("scene dimensions must all be >= 1")
        if self.n_bands < self.n_endmembers:
            raise ParameterError(
                f"need at least as many bands as endmembers, got "
                f"{self.n_bands} < {self.n_endmembers}"
            )
        if self.pattern not in PATTERNS:
            raise ParameterError(
                f"unknown pattern {self.pattern!r}, choose from {PATTERNS}"
            )
        if not self.smoothness > 0:
            raise ParameterError("smoothness must be > 0")
        if not 0.0 <= self.endmember_coherence < 1.0:
            raise ParameterError("endmember_coherence must lie in [0, 1)")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ParameterError("snr_db must be finite or +inf")

    def to_dict(self):
        return asdict(self)


@dataclass
class GroundTruth:
    """A generated scene with everything needed to score an estimate."""

    spec: SceneSpec
    endmembers: np.ndarray
    abundances: np.ndarray
    clean_cube: np.ndarray
    noisy_cube: np.ndarray
    realized_snr_db: float


def max_pairwise_cosine(M):
    """Largest cosine between distinct columns of `M` (0.0 if only one)."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[1] < 1:
        raise ParameterError(f"expected a nonempty 2-D matrix, got shape {M.shape}")
    if M.shape[1] == 1:
        return 0.0
    norms = np.linalg.norm(M, axis=0)
    if np.any(norms == 0):
        raise ParameterError("zero column in spectral matrix")
    G = (M / norms).T @ (M / norms)
    np.fill_diagonal(G, -np.inf)
    return float(G.max())


def gen_endmembers(n_bands, n_endmembers, coherence, seed=0):
    """Nonnegative spectra with a prescribed worst-case pairwise cosine.

    Starts from well-separated Gaussian bumps along the band axis and
    blends every spectrum toward one shared smooth positive curve; the
    blend weight is bisected until the largest pairwise cosine matches
    ``coherence``.  Columns are then scaled to reflectance-like peak
    values below one, which leaves cosines untouched.
    """
    L, R = int(n_bands), int(n_endmembers)
    if R < 1 or L < R:
        raise ParameterError(f"need n_bands >= n_endmembers >= 1, got {L}, {R}")
    if not 0.0 <= coherence < 1.0:
        raise ParameterError(f"coherence must lie in [0, 1), got {coherence}")
    rng = np.random.default_rng([seed, 0])

    grid = np.arange(L, dtype=np.float64)
    g = gaussian_filter1d(rng.standard_normal(L), sigma=max(L / 8.0, 1.0),
                          mode="reflect")
    g = g - g.mean()
    peak = np.abs(g).max()
    common = 1.0 + (0.5 / peak) * g if peak > 0 else np.ones(L)
    common /= np.linalg.norm(common)

    if R == 1:
        amp = rng.uniform(0.55, 0.95)
        return (amp * common / common.max()).reshape(L, 1)

    sigma_b = max(0.25 * L / R, 0.25)
    centers = (np.arange(R) + 0.5) * (L / R) - 0.5
    centers = centers + rng.uniform(-0.1, 0.1, size=R) * sigma_b
    bumps = np.exp(-((grid[:, None] - centers[None, :]) ** 2)
                   / (2.0 * sigma_b ** 2))
    bumps /= np.linalg.norm(bumps, axis=0)

    def cos_at(w):
        return max_pairwise_cosine((1.0 - w) * bumps + w * common[:, None])

    lo, hi = 0.0, 1.0 - 1e-9
    base = cos_at(lo)
    if base >= coherence:
        w = 0.0
        if base > coherence + 0.05:
            raise GenerationError(
                f"cannot reach coherence {coherence}: bump construction "
                f"already has cosine {base:.4f}"
            )
    else:
        for _ in range(80):
            w = 0.5 * (lo + hi)
            if cos_at(w) < coherence:
                lo = w
            else:
                hi = w
        w = 0.5 * (lo + hi)
        if abs(cos_at(w) - coherence) > 0.05:
            raise GenerationError(
                f"bisection missed coherence target {coherence} "
                f"(got {cos_at(w):.4f})"
            )

    spectra = (1.0 - w) * bumps + w * common[:, None]
    spectra = spectra / spectra.max(axis=0, keepdims=True)
    amps = rng.uniform(0.55, 0.95, size=R)
    return spectra * amps[None, :]


def _gauss_fields(rng, n1, n2, R, smoothness):
    fields = rng.standard_normal((n1, n2, R))
    fields = gaussian_filter(fields, sigma=(smoothness, smoothness, 0.0),
                             mode="reflect")
    return fields * fields


def _blocks(rng, n1, n2, R, smoothness):
    b = max(1, int(round(4.0 * smoothness)))
    gh = -(-n1 // b)
    gw = -(-n2 // b)
    labels = rng.integers(0, R, size=(gh, gw))
    lab = np.repeat(np.repeat(labels, b, axis=0), b, axis=1)[:n1, :n2]
    fields = np.eye(R)[lab]
    # A light blur softens the block borders; interiors stay near-pure.
    return gaussian_filter(fields, sigma=(0.6, 0.6, 0.0), mode="reflect")


def _bumps(rng, n1, n2, R, smoothness):
    yy, xx = np.indices((n1, n2), dtype=np.float64)
    sig = 2.0 * smoothness
    fields = np.full((n1, n2, R), 0.05)
    for r in range(R):
        for _ in range(3):
            cy = rng.uniform(0, n1)
            cx = rng.uniform(0, n2)
            amp = rng.uniform(0.5, 1.5)
            fields[:, :, r] += amp * np.exp(
                -((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sig ** 2)
            )
    return fields


def gen_abundances(spec):
    """Simplex-valued abundance tensor for the given scene.

    All patterns produce strictly valid fibers: nonnegative entries that
    sum to one exactly (up to the final float division).
    """
    spec.validate()
    rng = np.random.default_rng([spec.seed, 1])
    n1, n2, R = spec.rows, spec.cols, spec.n_endmembers
    if spec.pattern == "gauss-fields":
        fields = _gauss_fields(rng, n1, n2, R, spec.smoothness)
    elif spec.pattern == "blocks":
        fields = _blocks(rng, n1, n2, R, spec.smoothness)
    else:
        fields = _bumps(rng, n1, n2, R, spec.smoothness)
    fields = np.maximum(fields, 0.0)
    tot = fields.sum(axis=2)
    dead = tot <= 1e-300
    if np.any(dead):
        fields[dead] = 1.0
        tot = fields.sum(axis=2)
    return fields / tot[:, :, None]


def add_noise(clean, snr_db, seed=0):
    """White Gaussian noise scaled to a global signal-to-noise ratio.

    The variance solves ``sum(clean**2) / (n * var) = 10**(snr_db / 10)``.
    ``snr_db=inf`` returns the cube unchanged.  Also returns the realized
    SNR of the actual noise draw, in dB.
    """
    clean = as_tensor3(clean, name="clean cube")
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ParameterError("snr_db must be finite or +inf")
    if math.isinf(snr_db):
        return clean.copy(), math.inf
    s2 = float(np.einsum("ijk,ijk->", clean, clean))
    if s2 == 0.0:
        raise ParameterError("clean cube is identically zero: SNR undefined")
    var = s2 / (clean.size * 10.0 ** (snr_db / 10.0))
    rng = np.random.default_rng([seed, 2])
    noise = rng.standard_normal(clean.shape) * math.sqrt(var)
    realized = 10.0 * math.log10(s2 / float(np.einsum("ijk,ijk->", noise, noise)))
    return clean + noise, realized


def gen_scene(spec):
    """Full synthetic scene: spectra, abundances, clean and noisy cubes."""
    spec.validate()
    M = gen_endmembers(spec.n_bands, spec.n_endmembers,
                       spec.endmember_coherence, seed=spec.seed)
    A = gen_abundances(spec)
    clean = mode_k_product(A, M, 3)
    noisy, realized = add_noise(clean, spec.snr_db, seed=spec.seed)
    return GroundTruth(spec=spec, endmembers=M, abundances=A,
                       clean_cube=clean, noisy_cube=noisy,
                       realized_snr_db=realized)


def spatial_autocorr_lag1(map2d):
    """Mean lag-1 Pearson correlation over horizontal and vertical pairs.

    Constant maps correlate perfectly by convention (returns 1.0).
    """
    m = np.asarray(map2d, dtype=np.float64)
    if m.ndim != 2 or min(m.shape) < 2:
        raise ParameterError(f"need a 2-D map with both sides >= 2, got {m.shape}")
    a = np.concatenate([m[:, :-1].ravel(), m[:-1, :].ravel()])
    b = np.concatenate([m[:, 1:].ravel(), m[1:, :].ravel()])
    if a.var() < 1e-30 or b.var() < 1e-30:
        return 1.0
    return float(np.corrcoef(a, b)[0, 1])
