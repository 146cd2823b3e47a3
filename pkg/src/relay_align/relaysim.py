"""End-to-end relay pipeline: channels, encoders, relay broadcast, decoding.

Encoders are designed so that the two symbols of every pair land on the same
relay-side basis vector, so the relay only ever observes pairwise sums.  Each
receiver subtracts its own contribution, projects away the interference
space, and decodes by nearest constellation point per coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidInput,
    SecrecyViolation,
    SingularChannel,
    StrategyInvalid,
)
from .feasibility import (
    Strategy,
    StrategySpec,
    construct_strategy,
    verify_strategy,
)
from .subspace import DEFAULT_TOL, Subspace, Tolerance, orthonormal_basis, project_onto_perp

__all__ = [
    "Constellation",
    "NoiseModel",
    "ChannelSet",
    "SimReport",
    "BaselineReport",
    "SecrecyAuditReport",
    "DecodeResult",
    "draw_channels",
    "design_encoders",
    "relay_observe",
    "secrecy_audit",
    "receiver_decode",
    "snr",
    "snr_instantaneous",
    "relay_map_success",
    "run_monte_carlo",
    "two_user_baseline",
]

COND_LIMIT = 1e8


@dataclass(frozen=True)
class Constellation:
    """Finite zero-mean set of transmit points."""

    points: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128).ravel()
        if pts.size == 0:
            raise InvalidInput("constellation must be nonempty")
        if len(set(pts.tolist())) != pts.size:
            raise InvalidInput("constellation points must be distinct")
        if abs(pts.mean()) > 1e-12:
            raise InvalidInput("constellation must be zero-mean")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def bits_per_symbol(self) -> float:
        return float(np.log2(self.size))

    @classmethod
    def qpsk(cls) -> "Constellation":
        return cls(np.array([1, -1, 1j, -1j]), name="qpsk")

    @classmethod
    def bpsk(cls) -> "Constellation":
        return cls(np.array([1, -1]), name="bpsk")

    @classmethod
    def from_name(cls, name: str) -> "Constellation":
        table = {"qpsk": cls.qpsk, "bpsk": cls.bpsk}
        if name.lower() not in table:
            raise InvalidInput(f"unknown constellation {name!r}")
        return table[name.lower()]()

    def nearest_index(self, values: np.ndarray) -> np.ndarray:
        """Index of the closest point, elementwise."""
        v = np.asarray(values, dtype=np.complex128)
        return np.abs(v[..., None] - self.points).argmin(axis=-1)

    def map_success_table(self) -> np.ndarray:
        """succ[a, b] = 1 if the relay's MAP guess for sum a+b is the pair (a, b).

        The MAP guess for each observable sum is a fixed representative
        preimage; success probability per sum is 1 / (number of preimages).
        """
        m = self.size
        rep: dict[complex, tuple[int, int]] = {}
        succ = np.zeros((m, m))
        for a in range(m):
            for b in range(m):
                key = complex(np.round(self.points[a] + self.points[b], 9))
                if key not in rep:
                    rep[key] = (a, b)
                succ[a, b] = 1.0 if rep[key] == (a, b) else 0.0
        return succ


@dataclass(frozen=True)
class NoiseModel:
    """Variances of the relay noise z and the per-user noise w_k."""

    sigma_relay_sq: float
    sigma_user_sq: float

    def __post_init__(self):
        if self.sigma_relay_sq < 0 or self.sigma_user_sq < 0:
            raise InvalidInput("noise variances must be >= 0")


def _complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    if variance == 0:
        return np.zeros(shape, dtype=np.complex128)
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class ChannelSet:
    """User-to-relay matrices H_i and relay-to-user matrices G_k."""

    K: int
    N: int
    H: list[np.ndarray]
    G: list[np.ndarray]
    redraws: int = 0

    def __post_init__(self):
        if len(self.H) != self.K or len(self.G) != self.K:
            raise DimensionMismatch("need one H and one G per user")
        for m in [*self.H, *self.G]:
            m = np.asarray(m)
            if m.shape != (self.N, self.N):
                raise DimensionMismatch(f"channel matrix shape {m.shape}, expected {(self.N, self.N)}")
            if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
                raise InvalidInput("channel matrix has non-finite entries")


def draw_channels(k: int, n: int, rng: np.random.Generator, cond_limit: float = COND_LIMIT) -> ChannelSet:
    """i.i.d. standard complex Gaussian channels, redrawn if badly conditioned."""
    if k < 2 or n < 1:
        raise InvalidInput("need K >= 2 users and N >= 1 antennas")

    redraws = 0

    def one() -> np.ndarray:
        nonlocal redraws
        while True:
            m = _complex_gaussian(rng, (n, n), 1.0)
            if np.linalg.cond(m) <= cond_limit:
                return m
            redraws += 1

    h = [one() for _ in range(k)]
    g = [one() for _ in range(k)]
    return ChannelSet(K=k, N=n, H=h, G=g, redraws=redraws)


def design_encoders(strategy: Strategy, channels: ChannelSet) -> list[np.ndarray]:
    """Encoding matrices U_i = H_i^{-1} [B_ij blocks, partners ascending].

    Column c of H_i U_i then equals the shared basis vector of the pair that
    column serves, for both members of the pair.
    """
    if channels.N != strategy.spec.N or channels.K != strategy.spec.K:
        raise DimensionMismatch("channel set does not match strategy shape")
    encoders = []
    for i in range(strategy.spec.K):
        h = channels.H[i]
        if np.linalg.cond(h) > 1 / np.finfo(float).eps:
            raise SingularChannel(f"H_{i} is numerically singular")
        target = strategy.user_basis(i)
        encoders.append(np.linalg.solve(h, target))
    return encoders


def relay_observe(
    encoders: list[np.ndarray],
    channels: ChannelSet,
    symbols: list[np.ndarray],
    z: np.ndarray | None = None,
) -> np.ndarray:
    """Relay observation r = sum_i H_i U_i x_i + z."""
    if len(encoders) != channels.K or len(symbols) != channels.K:
        raise DimensionMismatch("need one encoder and one symbol vector per user")
    r = np.zeros(channels.N, dtype=np.complex128) if z is None else np.asarray(z, dtype=np.complex128).copy()
    if r.shape[0] != channels.N:
        raise DimensionMismatch("noise vector length does not match N")
    for h, u, x in zip(channels.H, encoders, symbols):
        x = np.asarray(x, dtype=np.complex128)
        if x.shape[0] != u.shape[1]:
            raise DimensionMismatch("symbol block width does not match encoder")
        r = r + h @ (u @ x)
    return r


@dataclass(frozen=True)
class SecrecyAuditReport:
    ok: bool
    worst_column_mismatch: float
    stacked_rank: int
    pair_sum_injective: bool


def secrecy_audit(
    encoders: list[np.ndarray],
    channels: ChannelSet,
    strategy: Strategy,
    tol: float = 1e-9,
) -> SecrecyAuditReport:
    """Check that the relay's noiseless view is a sum of masked pair blocks.

    Every pair-basis column must appear (to tol) among the relay-side columns
    of both users of the pair, each relay-side column must be claimed exactly
    once, and the map from per-pair sums to the observation must be injective
    (stacked pair bases of full rank N).  Raises SecrecyViolation otherwise.
    """
    n = strategy.spec.N
    effective = [channels.H[i] @ encoders[i] for i in range(strategy.spec.K)]
    claimed = [np.zeros(m.shape[1], dtype=bool) for m in effective]
    worst = 0.0
    for (i, j), b in sorted(strategy.pair_bases.items()):
        for col in b.T:
            for user in (i, j):
                m = effective[user]
                if m.shape[1] == 0:
                    raise SecrecyViolation(f"user {user} has no columns to serve pair {(i, j)}")
                dist = np.linalg.norm(m - col[:, None], axis=0)
                dist = np.where(claimed[user], np.inf, dist)
                best = int(dist.argmin())
                worst = max(worst, float(dist[best]))
                if dist[best] > tol:
                    raise SecrecyViolation(
                        f"pair {(i, j)}: no unclaimed column of user {user} matches "
                        f"the shared basis vector (best residual {dist[best]:.3e})"
                    )
                claimed[user][best] = True
    if not all(c.all() for c in claimed):
        raise SecrecyViolation("some relay-side column serves no pair (unmasked symbol)")
    stacked = np.hstack([b for _, b in sorted(strategy.pair_bases.items())])
    rank = np.linalg.matrix_rank(stacked) if stacked.size else 0
    injective = rank == stacked.shape[1] == n
    if not injective:
        raise SecrecyViolation("map from pair sums to the relay observation is not injective")
    return SecrecyAuditReport(
        ok=True, worst_column_mismatch=worst, stacked_rank=int(rank), pair_sum_injective=injective
    )


def _require_verified(strategy: Strategy, tol: Tolerance) -> None:
    report = verify_strategy(strategy.subspaces, strategy.spec.N, tol)
    if not report.ok:
        raise StrategyInvalid(f"strategy fails verification: {report.failed_conditions()}")


def _perp_projector_basis(strategy: Strategy, channels: ChannelSet, k: int, tol: Tolerance) -> Subspace:
    """Image of user k's interference space through G_k (projection target)."""
    interference = strategy.interference_space(k, tol)
    cols = channels.G[k] @ interference.basis
    return orthonormal_basis(cols, tol) if cols.shape[1] else Subspace.zero(strategy.spec.N)


def _decode_matrix(strategy: Strategy, channels: ChannelSet, k: int, gik: Subspace) -> np.ndarray:
    """Projected relay-to-user images of the pair-basis columns serving user k."""
    blocks = [strategy.pair_basis(j, k) for j in strategy.partners(k)]
    cols = np.hstack(blocks)
    return project_onto_perp(channels.G[k] @ cols, gik)


@dataclass(frozen=True)
class DecodeResult:
    """Per-partner decoded symbols for one receiver."""

    user: int
    symbols_by_partner: dict[int, np.ndarray]
    estimates_by_partner: dict[int, np.ndarray]

    def all_symbols(self) -> np.ndarray:
        return np.concatenate([self.symbols_by_partner[j] for j in sorted(self.symbols_by_partner)])


def receiver_decode(
    k: int,
    y_tilde: np.ndarray,
    x_k: np.ndarray,
    encoders: list[np.ndarray],
    channels: ChannelSet,
    strategy: Strategy,
    constellation: Constellation,
    tol: Tolerance = DEFAULT_TOL,
) -> DecodeResult:
    """Subtract own contribution, project away interference, decode per symbol.

    Returns, for each partner j, the decoded coefficients of the shared basis
    columns B_jk, i.e. the block of partner j's symbols destined for user k.
    """
    _require_verified(strategy, tol)
    spec = strategy.spec
    if not 0 <= k < spec.K:
        raise InvalidInput(f"user index {k} out of range")
    y_tilde = np.asarray(y_tilde, dtype=np.complex128)
    x_k = np.asarray(x_k, dtype=np.complex128)
    g = channels.G[k]
    y = y_tilde - g @ (channels.H[k] @ (encoders[k] @ x_k))
    gik = _perp_projector_basis(strategy, channels, k, tol)
    yp = project_onto_perp(y.reshape(-1, 1), gik).ravel()
    m = _decode_matrix(strategy, channels, k, gik)
    est, *_ = np.linalg.lstsq(m, yp, rcond=None)
    hard = constellation.points[constellation.nearest_index(est)]
    symbols, estimates = {}, {}
    off = 0
    for j in strategy.partners(k):
        w = strategy.pair_basis(j, k).shape[1]
        symbols[j] = hard[off : off + w]
        estimates[j] = est[off : off + w]
        off += w
    return DecodeResult(user=k, symbols_by_partner=symbols, estimates_by_partner=estimates)


def snr(
    k: int,
    strategy: Strategy,
    channels: ChannelSet,
    noise: NoiseModel,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Analytic-expectation signal-to-noise ratio after interference projection.

    Numerator ||P_k G_k B_k||_F^2 with B_k an orthonormal basis of V_k;
    denominator replaces the noise by its expected projected power:
    sigma_z^2 ||P_k G_k||_F^2 + sigma_w^2 rank(P_k).  Returns +inf when both
    variances are zero.
    """
    _require_verified(strategy, tol)
    gik = _perp_projector_basis(strategy, channels, k, tol)
    g = channels.G[k]
    num = np.linalg.norm(project_onto_perp(g @ strategy.subspaces[k].basis, gik)) ** 2
    rank_p = strategy.spec.N - gik.d
    denom = noise.sigma_relay_sq * np.linalg.norm(project_onto_perp(g, gik)) ** 2
    denom += noise.sigma_user_sq * rank_p
    if denom == 0:
        return float("inf")
    return float(num / denom)


def snr_instantaneous(
    k: int,
    strategy: Strategy,
    channels: ChannelSet,
    z: np.ndarray,
    w_k: np.ndarray,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Per-draw variant of snr() with explicit noise realizations."""
    _require_verified(strategy, tol)
    gik = _perp_projector_basis(strategy, channels, k, tol)
    g = channels.G[k]
    num = np.linalg.norm(project_onto_perp(g @ strategy.subspaces[k].basis, gik)) ** 2
    denom = np.linalg.norm(project_onto_perp((g @ np.asarray(z)).reshape(-1, 1), gik)) ** 2
    denom += np.linalg.norm(project_onto_perp(np.asarray(w_k).reshape(-1, 1), gik)) ** 2
    if denom == 0:
        return float("inf")
    return float(num / denom)


def relay_map_success(constellation: Constellation) -> Fraction:
    """Exact MAP probability of the relay guessing an ordered pair from its sum.

    Equals (number of distinct pairwise sums) / |X|^2.
    """
    pts = constellation.points
    sums = {complex(np.round(a + b, 9)) for a in pts for b in pts}
    return Fraction(len(sums), pts.size**2)


@dataclass(frozen=True)
class SimReport:
    """One noise level's outcome: SNR, symbol-error and equivocation rates."""

    noise_var: float
    per_user_snr: list[float]
    per_user_ser: list[float]
    relay_map_success_rate: float
    trials: int
    seed: int
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if not all(0 <= r <= 1 for r in self.per_user_ser):
            raise InvalidInput("symbol-error rates must lie in [0, 1]")


def run_monte_carlo(
    spec: StrategySpec,
    constellation: Constellation,
    noise_grid: list[float],
    trials: int,
    seed: int,
    tol: Tolerance = DEFAULT_TOL,
) -> list[SimReport]:
    """Full pipeline SER / equivocation sweep over a grid of noise variances.

    Block-fading convention: one channel draw per noise level, symbols drawn
    uniformly per trial.  The relay-equivocation tally uses the noiseless
    sums, matching the exact counting argument, and is therefore a Monte
    Carlo estimate of relay_map_success.
    """
    if trials < 1:
        raise InvalidInput("trials must be >= 1")
    strategy = construct_strategy(spec)
    _require_verified(strategy, tol)
    succ_table = constellation.map_success_table()
    pts = constellation.points
    k_users, n = spec.K, spec.N
    config = {
        "K": k_users,
        "N": n,
        "d": list(spec.d),
        "constellation": constellation.name,
        "points": [[p.real, p.imag] for p in pts.tolist()],
        "noise_grid": [float(v) for v in noise_grid],
        "trials": trials,
    }
    level_seeds = np.random.SeedSequence(seed).spawn(len(noise_grid))
    reports = []
    for var, ss in zip(noise_grid, level_seeds):
        rng = np.random.default_rng(ss)
        channels = draw_channels(k_users, n, rng)
        encoders = design_encoders(strategy, channels)
        effective = [channels.H[i] @ encoders[i] for i in range(k_users)]

        idx = [rng.integers(0, pts.size, size=(spec.d[i], trials)) for i in range(k_users)]
        x = [pts[ix] for ix in idx]

        r = sum(effective[i] @ x[i] for i in range(k_users))
        r = r + _complex_gaussian(rng, (n, trials), var)

        ser = []
        snrs = []
        noise = NoiseModel(sigma_relay_sq=var, sigma_user_sq=var)
        for k in range(k_users):
            g = channels.G[k]
            y_tilde = g @ r + _complex_gaussian(rng, (n, trials), var)
            y = y_tilde - g @ (effective[k] @ x[k])
            gik = _perp_projector_basis(strategy, channels, k, tol)
            yp = project_onto_perp(y, gik)
            m = _decode_matrix(strategy, channels, k, gik)
            est = np.linalg.pinv(m) @ yp
            hard_idx = constellation.nearest_index(est)
            sent_idx = np.vstack(
                [idx[j][strategy.block_slice(j, k)] for j in strategy.partners(k)]
            )
            d_k = spec.d[k]
            errors = int(np.count_nonzero(hard_idx != sent_idx))
            ser.append(errors / (d_k * trials) if d_k else 0.0)
            snrs.append(snr(k, strategy, channels, noise, tol))

        relay_hits = 0
        relay_slots = 0
        for (i, j), dij in strategy.pair_dims().items():
            if dij == 0:
                continue
            ai = idx[i][strategy.block_slice(i, j)]
            aj = idx[j][strategy.block_slice(j, i)]
            relay_hits += succ_table[ai, aj].sum()
            relay_slots += ai.size
        relay_rate = relay_hits / relay_slots if relay_slots else 0.0

        reports.append(
            SimReport(
                noise_var=float(var),
                per_user_snr=snrs,
                per_user_ser=ser,
                relay_map_success_rate=float(relay_rate),
                trials=trials,
                seed=seed,
                config=config,
            )
        )
    return reports


@dataclass(frozen=True)
class BaselineReport:
    """Scalar two-user pipeline outcome."""

    ser: tuple[float, float]
    relay_map_success_rate: float
    u: tuple[complex, complex]
    trials: int


def two_user_baseline(
    h1: complex,
    h2: complex,
    g1: complex,
    g2: complex,
    constellation: Constellation,
    noise: NoiseModel,
    trials: int,
    rng: np.random.Generator,
) -> BaselineReport:
    """Scalar baseline: premultipliers aligned so the relay sees x1 + x2."""
    if h1 == 0 or h2 == 0:
        raise SingularChannel("zero user-to-relay coefficient")
    if trials < 1:
        raise InvalidInput("trials must be >= 1")
    u1, u2 = 1 / h1, 1 / h2
    pts = constellation.points
    succ_table = constellation.map_success_table()

    a = rng.integers(0, pts.size, trials)
    b = rng.integers(0, pts.size, trials)
    x1, x2 = pts[a], pts[b]
    z = _complex_gaussian(rng, trials, noise.sigma_relay_sq)
    r = x1 + x2 + z

    errors = []
    for g, own, other_idx, other in ((g1, x1, b, x2), (g2, x2, a, x1)):
        w = _complex_gaussian(rng, trials, noise.sigma_user_sq)
        y = g * r + w - g * own
        est = y / g
        hard = constellation.nearest_index(est)
        errors.append(int(np.count_nonzero(hard != other_idx)) / trials)

    relay_rate = float(succ_table[a, b].mean())
    return BaselineReport(
        ser=(errors[0], errors[1]),
        relay_map_success_rate=relay_rate,
        u=(u1, u2),
        trials=trials,
    )
