"""Channel synthesis: diffraction propagation inside the stack and
correlated Rician fading between transmitters and the first layer.

The inter-element diffraction coefficient follows the Rayleigh-Sommerfeld
form

    w = (A_t * cos(chi) / r) * (1 / (2 pi r) - j / lambda) * exp(j 2 pi r / lambda)

with r the source-destination distance, chi the angle between the layer
normal (+z) and the propagation direction, and A_t the element aperture.
In the far field |w| decays like 1/r.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import SimGeometry, UserLayout


def rs_matrix(
    src: np.ndarray, dst: np.ndarray, atom_area: float, wavelength: float
) -> np.ndarray:
    """Diffraction coefficients from each source point to each destination.

    Parameters
    ----------
    src : (Ns, 3) source positions
    dst : (Nd, 3) destination positions
    atom_area : radiating aperture of one source element
    wavelength : carrier wavelength

    Returns
    -------
    (Nd, Ns) complex matrix, entry (d, s) = coefficient src s -> dst d.
    """
    src = np.atleast_2d(np.asarray(src, dtype=float))
    dst = np.atleast_2d(np.asarray(dst, dtype=float))
    diff = dst[:, None, :] - src[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    if np.any(r == 0):
        raise ValueError("coincident source and destination points")
    cos_chi = diff[..., 2] / r
    return (
        (atom_area * cos_chi / r)
        * (1.0 / (2 * np.pi * r) - 1j / wavelength)
        * np.exp(2j * np.pi * r / wavelength)
    )


def rs_coefficient(src, dst, atom_area: float, wavelength: float) -> complex:
    """Single source/destination diffraction coefficient."""
    return complex(rs_matrix(src, dst, atom_area, wavelength)[0, 0])


def inter_layer_matrix(geom: SimGeometry, l: int) -> np.ndarray:
    """Propagation matrix W_l from layer l-1 to layer l (l in 2..L)."""
    if not 2 <= l <= geom.layers:
        raise ValueError(f"layer index {l} outside 2..{geom.layers}")
    return rs_matrix(
        geom.atom_positions[l - 2],
        geom.atom_positions[l - 1],
        geom.atom_area,
        geom.wavelength,
    )


def sim_to_bs_matrix(geom: SimGeometry) -> np.ndarray:
    """Propagation matrix G from the last layer to the receive antennas."""
    if geom.bs_standoff <= 0:
        raise ValueError("receive array must sit strictly behind the stack")
    return rs_matrix(
        geom.atom_positions[-1],
        geom.antenna_positions,
        geom.atom_area,
        geom.wavelength,
    )


def correlation_matrix(geom: SimGeometry) -> np.ndarray:
    """Isotropic-scattering spatial correlation over the first layer,
    R[m, n] = sinc(2 d_mn / lambda) with the normalized sinc."""
    p = geom.atom_positions[0]
    d = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)
    return np.sinc(2 * d / geom.wavelength)


def correlation_sqrt(corr: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root; small negative round-off eigenvalues
    are clipped at zero."""
    vals, vecs = np.linalg.eigh(corr)
    if np.any(vals < -1e-12):
        raise ValueError("correlation matrix is not positive semidefinite")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def steering_vector(geom: SimGeometry, azimuth: float, elevation: float) -> np.ndarray:
    """Plane-wave array response of the first layer toward the given
    direction (relative inter-atom phasing only)."""
    cos_e = np.cos(elevation)
    direction = np.array(
        [np.sin(azimuth) * cos_e, np.sin(elevation), -np.cos(azimuth) * cos_e]
    )
    phase = 2 * np.pi / geom.wavelength * (geom.atom_positions[0] @ direction)
    return np.exp(1j * phase)


def user_channel(
    geom: SimGeometry,
    layout: UserLayout,
    k: int,
    seed: int,
    corr_sqrt: np.ndarray | None = None,
) -> np.ndarray:
    """Correlated Rician channel from user k to the first layer.

    h = sqrt(beta) * (sqrt(kappa/(1+kappa)) a + sqrt(1/(1+kappa)) R^{1/2} z)

    with a the steering vector, z iid unit complex normal and beta the
    distance pathloss. kappa = inf yields the pure steering vector.
    """
    n = geom.atoms_per_layer
    beta = layout.pathloss(k)
    a = steering_vector(geom, float(layout.azimuth[k]), float(layout.elevation[k]))
    kappa = layout.rician_factor
    if np.isinf(kappa):
        return np.sqrt(beta) * a
    if corr_sqrt is None:
        corr_sqrt = correlation_sqrt(correlation_matrix(geom))
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    los = np.sqrt(kappa / (1 + kappa)) * a
    nlos = np.sqrt(1 / (1 + kappa)) * (corr_sqrt @ z)
    return np.sqrt(beta) * (los + nlos)


def jammer_channel(
    geom: SimGeometry,
    layout: UserLayout,
    seed: int,
    corr_sqrt: np.ndarray | None = None,
) -> np.ndarray:
    """Jammer-to-first-layer channel; same model as a user at the jammer
    position (identical position and seed give the identical vector)."""
    if layout.count != 1:
        raise ValueError("jammer layout must contain exactly one position")
    return user_channel(geom, layout, 0, seed, corr_sqrt=corr_sqrt)


@dataclass
class ChannelSet:
    """All propagation matrices of one realization.

    inter_layer[i] is the matrix from layer i+1 to layer i+2 (empty for a
    single-layer stack). h_jam is the optional jammer column.
    """

    H: np.ndarray  # (N, K) users -> first layer
    inter_layer: list  # L-1 matrices, each (N, N)
    G: np.ndarray  # (M, N) last layer -> antennas
    h_jam: np.ndarray | None = None
    wavelength: float = 0.0
    seed: int = 0

    def __post_init__(self):
        arrays = [self.H, self.G] + list(self.inter_layer)
        if self.h_jam is not None:
            arrays.append(self.h_jam)
        for a in arrays:
            if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
                raise ValueError("channel matrices must be finite")

    @property
    def layers(self) -> int:
        return len(self.inter_layer) + 1

    @property
    def atoms(self) -> int:
        return self.H.shape[0]

    @property
    def users(self) -> int:
        return self.H.shape[1]

    @property
    def antennas(self) -> int:
        return self.G.shape[0]


def build_channel_set(
    geom: SimGeometry,
    layout: UserLayout,
    user_seeds,
    jammer_layout: UserLayout | None = None,
    jammer_seed: int | None = None,
    corr_sqrt: np.ndarray | None = None,
    seed: int = 0,
) -> ChannelSet:
    """Assemble one channel realization.

    Uniform layer spacing makes all inter-layer matrices identical, so the
    propagation matrix is computed once and shared.
    """
    if len(user_seeds) != layout.count:
        raise ValueError("one seed per user required")
    if corr_sqrt is None and not np.isinf(layout.rician_factor):
        corr_sqrt = correlation_sqrt(correlation_matrix(geom))
    cols = [
        user_channel(geom, layout, k, user_seeds[k], corr_sqrt=corr_sqrt)
        for k in range(layout.count)
    ]
    H = np.column_stack(cols)
    if geom.layers >= 2:
        w = inter_layer_matrix(geom, 2)
        inter = [w] * (geom.layers - 1)
    else:
        inter = []
    G = sim_to_bs_matrix(geom)
    h_jam = None
    if jammer_layout is not None:
        if jammer_seed is None:
            raise ValueError("jammer_seed required with a jammer layout")
        h_jam = jammer_channel(geom, jammer_layout, jammer_seed, corr_sqrt=corr_sqrt)
    return ChannelSet(
        H=H, inter_layer=inter, G=G, h_jam=h_jam, wavelength=geom.wavelength, seed=seed
    )


def save_channel_set(cs: ChannelSet, path) -> None:
    """Binary dump (npz) with a dimension/wavelength/seed header for replay."""
    payload = {
        "H": cs.H,
        "G": cs.G,
        "header": np.array(
            [cs.atoms, cs.users, cs.antennas, cs.layers, cs.wavelength, cs.seed]
        ),
    }
    if cs.inter_layer:
        payload["W"] = np.stack(cs.inter_layer)
    if cs.h_jam is not None:
        payload["h_jam"] = cs.h_jam
    np.savez(path, **payload)


def load_channel_set(path) -> ChannelSet:
    with np.load(path) as data:
        header = data["header"]
        inter = [w for w in data["W"]] if "W" in data else []
        h_jam = data["h_jam"] if "h_jam" in data else None
        return ChannelSet(
            H=data["H"],
            inter_layer=inter,
            G=data["G"],
            h_jam=h_jam,
            wavelength=float(header[4]),
            seed=int(header[5]),
        )
