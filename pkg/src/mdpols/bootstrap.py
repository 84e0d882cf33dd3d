"""Polya-urn multinomial bootstrap of the OLS functional.

Each replicate draws ``n + ceil(alpha) + 1`` multinomial trials over the rows
of the augmented design with probabilities ``(n_1, ..., n_c, m, ..., m) /
(alpha + n)`` and rescales the counts by ``(n + alpha + 1) / (n + ceil(alpha)
+ 1)``, so every weight vector sums to ``n + alpha + 1``.

Randomness is organised in fixed-size chunks, each with its own Philox
stream spawned from the master seed, so results do not depend on how the
chunks are scheduled.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .alpha import AlphaPosterior
from .validation import check_alpha, check_positive_int

CHUNK = 4096


def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _stream(seq):
    return np.random.Generator(np.random.Philox(seq))


def sampling_probabilities(design, alpha):
    """Event probabilities of the urn; per-row ridge mass is renormalized here only."""
    p = design.prior_weights(alpha) / (alpha + design.n)
    total = p.sum()
    if design.imaginary_mass_mode == "per_row" and design.S:
        return p / total
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"event probabilities sum to {total!r}, not 1")
    return p / total


def _trials(design, alpha):
    n = design.n
    if n != round(n):
        raise ValueError("bootstrap needs integer cluster counts")
    return int(round(n)) + math.ceil(alpha) + 1


def sample_weights(design, alpha, rng):
    """One scaled multinomial weight vector over the augmented rows."""
    alpha = check_alpha(alpha)
    trials = _trials(design, alpha)
    counts = rng.multinomial(trials, sampling_probabilities(design, alpha))
    return counts * ((design.n + alpha + 1.0) / trials)


def _draw_chunk(design, alphas, rng):
    n = design.n
    probs = np.array([sampling_probabilities(design, a) for a in alphas])
    trials = np.array([_trials(design, a) for a in alphas])
    counts = rng.multinomial(trials, probs)
    return counts * ((n + alphas + 1.0) / trials)[:, None]


def _alphas(post, size, rng):
    if isinstance(post, AlphaPosterior):
        return post.sample(rng, size=size)
    return np.full(size, float(post))


def draw_weights(design, alpha, B, seed=None):
    """``B`` weight vectors, shape ``(B, c_n + S)``; ``alpha`` fixed or a posterior."""
    B = check_positive_int(B, "B")
    if not isinstance(alpha, AlphaPosterior):
        check_alpha(alpha)
    seq = _seed_sequence(seed)
    n_chunks = -(-B // CHUNK)
    out = []
    for k, child in enumerate(seq.spawn(n_chunks)):
        rng = _stream(child)
        size = min(CHUNK, B - k * CHUNK)
        out.append(_draw_chunk(design, _alphas(alpha, size, rng), rng))
    return np.concatenate(out)


def _batched_wls(X, y, W):
    G = np.einsum("bi,ij,ik->bjk", W, X, X)
    h = (W * y) @ X
    ok = np.linalg.matrix_rank(G, hermitian=True) == X.shape[1]
    betas = np.full((W.shape[0], X.shape[1]), np.nan)
    if ok.any():
        betas[ok] = np.linalg.solve(G[ok], h[ok][..., None])[..., 0]
    return betas, ok


@dataclass(frozen=True, eq=False)
class BootstrapSample:
    betas: np.ndarray
    alphas: np.ndarray
    seed: object
    rejected: int = 0

    @property
    def B(self):
        return self.betas.shape[0]

    def mean(self):
        return self.betas.mean(axis=0)

    def cov(self):
        return np.cov(self.betas, rowvar=False, ddof=1)

    def mc_se(self):
        return self.betas.std(axis=0, ddof=1) / np.sqrt(self.B)

    def to_csv(self, path, column_names=None):
        K = self.betas.shape[1]
        names = list(column_names) if column_names else [f"beta{j}" for j in range(K)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate", "alpha"] + names)
            for b, (a, row) in enumerate(zip(self.alphas, self.betas)):
                w.writerow([b, repr(float(a))] + [repr(float(v)) for v in row])


def bootstrap_functional(design, alpha, B, seed=None, max_reject_rate=0.5):
    """Bootstrap draws of the WLS functional.

    ``alpha`` is a fixed positive value or an :class:`AlphaPosterior`, in which
    case each replicate first draws its own alpha. Replicates whose weighted
    Gram matrix is singular are discarded and redrawn from the same chunk
    stream; the number discarded is reported in ``rejected``.
    """
    B = check_positive_int(B, "B")
    if not isinstance(alpha, AlphaPosterior):
        check_alpha(alpha)
    seq = _seed_sequence(seed)
    X, y = design.Xa, design.ya
    n_chunks = -(-B // CHUNK)
    betas, alphas = [], []
    rejected = 0
    for k, child in enumerate(seq.spawn(n_chunks)):
        rng = _stream(child)
        need = min(CHUNK, B - k * CHUNK)
        attempts = 0
        while need:
            a = _alphas(alpha, need, rng)
            W = _draw_chunk(design, a, rng)
            bt, ok = _batched_wls(X, y, W)
            attempts += need
            bad = int((~ok).sum())
            rejected += bad
            if rejected > max_reject_rate * (k * CHUNK + attempts):
                raise RuntimeError(
                    f"{rejected} singular bootstrap replicates; the design is ill-posed "
                    "(add ridge variance or check for collinear columns)")
            betas.append(bt[ok])
            alphas.append(a[ok])
            need = bad
    return BootstrapSample(betas=np.concatenate(betas), alphas=np.concatenate(alphas),
                           seed=seq.entropy, rejected=rejected)


def edf_event_moments(design, alpha, event):
    """Posterior mean and variance of ``F(B0)`` for a set of augmented rows.

    ``event`` is a boolean mask over the ``c_n + S`` rows marking which atoms
    fall in ``B0``. Returns ``(Fbar, Fbar (1 - Fbar) / (alpha + n + 1))``.
    """
    p = sampling_probabilities(design, alpha)
    fbar = float(p[np.asarray(event, dtype=bool)].sum())
    return fbar, fbar * (1.0 - fbar) / (alpha + design.n + 1.0)


def edf_event_draws(weights, event, alpha, n):
    """Bootstrap values of ``F*(B0) = sum_{c in B0} n*_c / (n + alpha + 1)``."""
    return weights[:, np.asarray(event, dtype=bool)].sum(axis=1) / (n + alpha + 1.0)
