"""Stack forward model, equivalent channel and receive-side selection."""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .channels import ChannelSet

TWO_PI = 2 * np.pi


def wrap_phases(x: np.ndarray) -> np.ndarray:
    """Wrap into the canonical interval [0, 2pi). np.mod can return
    exactly 2pi for tiny negative inputs, so that edge is folded back."""
    out = np.mod(np.asarray(x, dtype=float), TWO_PI)
    return np.where(out >= TWO_PI, 0.0, out)


@dataclass
class PhaseBook:
    """Per-layer, per-atom phase shifts, always stored in [0, 2pi)."""

    phases: np.ndarray  # (L, N)

    def __post_init__(self):
        p = np.asarray(self.phases, dtype=float)
        if p.ndim != 2:
            raise ValueError("phases must be a (layers, atoms) array")
        if not np.all(np.isfinite(p)):
            raise ValueError("phases must be finite")
        self.phases = wrap_phases(p)

    @classmethod
    def random(cls, layers: int, atoms: int, seed: int) -> "PhaseBook":
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(0.0, TWO_PI, size=(layers, atoms)))

    @classmethod
    def zeros(cls, layers: int, atoms: int) -> "PhaseBook":
        return cls(np.zeros((layers, atoms)))

    @property
    def layers(self) -> int:
        return self.phases.shape[0]

    @property
    def atoms(self) -> int:
        return self.phases.shape[1]

    def copy(self) -> "PhaseBook":
        return PhaseBook(self.phases.copy())


def save_phase_book(pb: PhaseBook, path) -> None:
    """Text dump: header line "L N", then L*N phases in radians
    (layer-major), 17 significant digits each."""
    with open(path, "w", newline="\n") as f:
        f.write(f"{pb.layers} {pb.atoms}\n")
        for value in pb.phases.ravel():
            f.write(f"{value:.17g}\n")


def load_phase_book(path) -> PhaseBook:
    with open(path) as f:
        layers, atoms = (int(tok) for tok in f.readline().split())
        values = [float(f.readline()) for _ in range(layers * atoms)]
    return PhaseBook(np.array(values).reshape(layers, atoms))


def _check_shapes(ch: ChannelSet, pb: PhaseBook) -> None:
    if pb.layers != ch.layers:
        raise ValueError(f"phase book has {pb.layers} layers, channels {ch.layers}")
    if pb.atoms != ch.atoms:
        raise ValueError(f"phase book has {pb.atoms} atoms, channels {ch.atoms}")


def forward(
    ch: ChannelSet,
    pb: PhaseBook,
    s: np.ndarray,
    jam: complex | None = None,
    coupling: np.ndarray | None = None,
) -> np.ndarray:
    """Propagate one symbol vector through the stack.

    y = G Phi_L W_L ... W_2 Phi_1 (H s + h_jam * jam), noiseless. The
    optional coupling matrix left-multiplies every phase layer.
    """
    _check_shapes(ch, pb)
    s = np.asarray(s)
    if s.shape != (ch.users,):
        raise ValueError(f"expected {ch.users} symbols, got shape {s.shape}")
    x = ch.H @ s.astype(complex)
    if jam is not None:
        if ch.h_jam is None:
            raise ValueError("channel set has no jammer column")
        x = x + ch.h_jam * jam
    for l in range(ch.layers):
        x = np.exp(1j * pb.phases[l]) * x
        if coupling is not None:
            x = coupling @ x
        if l < ch.layers - 1:
            x = ch.inter_layer[l] @ x
    return ch.G @ x


@dataclass
class EquivalentChannel:
    """End-to-end linear map of the configured stack.

    full is (M, K); jammer_full is the unit-input jammer column. The
    selected views are filled once an antenna assignment is applied.
    """

    full: np.ndarray
    jammer_full: np.ndarray | None = None
    selected: np.ndarray | None = None
    jammer_selected: np.ndarray | None = None

    def select(self, assignment: "AntennaAssignment") -> "EquivalentChannel":
        rows = assignment.antenna_for_user
        return replace(
            self,
            selected=self.full[rows, :],
            jammer_selected=None if self.jammer_full is None else self.jammer_full[rows],
        )


def equivalent_channel(
    ch: ChannelSet, pb: PhaseBook, coupling: np.ndarray | None = None
) -> EquivalentChannel:
    """Compose the stack into the (M, K) equivalent channel (plus the
    jammer column when present)."""
    _check_shapes(ch, pb)
    if ch.h_jam is not None:
        x = np.column_stack([ch.H, ch.h_jam])
    else:
        x = ch.H.copy()
    for l in range(ch.layers):
        x = np.exp(1j * pb.phases[l])[:, None] * x
        if coupling is not None:
            x = coupling @ x
        if l < ch.layers - 1:
            x = ch.inter_layer[l] @ x
    full = ch.G @ x
    if ch.h_jam is not None:
        return EquivalentChannel(full=full[:, : ch.users], jammer_full=full[:, -1])
    return EquivalentChannel(full=full)


def cumulative_layer_channels(
    ch: ChannelSet, pb: PhaseBook, coupling: np.ndarray | None = None
) -> list:
    """Equivalent channel after each prefix of configured layers.

    Entry l keeps the phases of layers 1..l+1 and zeroes the rest, so the
    remaining layers act as plain diffraction. The last entry is the fully
    configured channel.
    """
    _check_shapes(ch, pb)
    out = []
    for l in range(ch.layers):
        trunc = pb.phases.copy()
        trunc[l + 1 :, :] = 0.0
        out.append(equivalent_channel(ch, PhaseBook(trunc), coupling=coupling).full)
    return out


@dataclass
class AntennaAssignment:
    """Injective user -> receive antenna map."""

    antenna_for_user: np.ndarray  # (K,) int

    def __post_init__(self):
        a = np.asarray(self.antenna_for_user, dtype=int)
        if len(np.unique(a)) != len(a):
            raise ValueError("assignment must be injective")
        self.antenna_for_user = a


def assign_antennas(eq: EquivalentChannel) -> AntennaAssignment:
    """Match each user to a distinct antenna maximizing the summed
    magnitude of the matched entries (Hungarian method)."""
    mags = np.abs(eq.full)
    m, k = mags.shape
    if m < k:
        raise ValueError(f"{m} antennas cannot serve {k} users injectively")
    rows, cols = linear_sum_assignment(mags, maximize=True)
    antenna_for_user = np.empty(k, dtype=int)
    antenna_for_user[cols] = rows
    return AntennaAssignment(antenna_for_user)


def diagonality_metrics(selected: np.ndarray) -> dict:
    """Diagonal-dominance summary of a square selected channel.

    The matrix is Frobenius-normalized first so the metrics are scale
    free. Variance of the diagonal magnitudes is the population variance.
    """
    d = np.asarray(selected)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("selected channel must be square")
    k = d.shape[0]
    if k < 2:
        raise ValueError("off-diagonal metrics need at least two users")
    norm = np.linalg.norm(d)
    if norm == 0:
        raise ValueError("selected channel is identically zero")
    d = d / norm
    diag = np.abs(np.diag(d))
    off_mask = ~np.eye(k, dtype=bool)
    avg_diag = float(np.mean(diag**2))
    avg_off = float(np.mean(np.abs(d[off_mask]) ** 2))
    var_diag = float(np.var(diag))
    return {
        "avg_diag_power": avg_diag,
        "avg_offdiag_power": avg_off,
        "diag_variance": var_diag,
        "diag_variance_db": 10 * math.log10(var_diag) if var_diag > 0 else -math.inf,
        "offdiag_suppression_db": (
            10 * math.log10(avg_diag / avg_off) if avg_off > 0 else math.inf
        ),
    }
