"""Metasurface stack and receive-array geometry.

Coordinates: the stack axis is z. Layer 1 (the one users illuminate) sits
at z = 0, subsequent layers at multiples of the inter-layer spacing, and
the receive array is a centered ULA along x at a standoff behind the last
layer. Users live in the z < 0 half space.
"""

import math
from dataclasses import dataclass

import numpy as np

# default user/jammer placement region
AZIMUTH_RANGE = (-math.pi / 3, math.pi / 3)
ELEVATION_RANGE = (-math.pi / 6, math.pi / 6)
DISTANCE_RANGE = (20.0, 60.0)


@dataclass
class SimGeometry:
    wavelength: float
    layers: int
    atoms_x: int
    atoms_y: int
    atom_spacing: float
    total_thickness: float
    inter_layer_spacing: float
    bs_antennas: int
    bs_spacing: float
    bs_standoff: float
    atom_positions: list  # one (N, 3) array per layer, user side first
    antenna_positions: np.ndarray  # (M, 3)

    @property
    def atoms_per_layer(self) -> int:
        return self.atoms_x * self.atoms_y

    @property
    def atom_area(self) -> float:
        return self.atom_spacing**2


def build_geometry(
    wavelength: float,
    layers: int,
    atoms_x: int,
    atoms_y: int,
    bs_antennas: int,
    atom_spacing: float | None = None,
    total_thickness: float | None = None,
    bs_spacing: float | None = None,
    bs_standoff: float | None = None,
) -> SimGeometry:
    """Build the stack geometry. Atom spacing defaults to half a
    wavelength and the total thickness to 10 wavelengths. The receive
    array defaults to one-wavelength element spacing at a 3-wavelength
    standoff; tighter arrays leave adjacent propagation rows so
    correlated that per-user beams degenerate for some draws.
    """
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    if layers < 1:
        raise ValueError("need at least one layer")
    if atoms_x < 1 or atoms_y < 1:
        raise ValueError("need at least one atom per side")
    if bs_antennas < 1:
        raise ValueError("need at least one receive antenna")

    if atom_spacing is None:
        atom_spacing = wavelength / 2
    if total_thickness is None:
        total_thickness = 10 * wavelength
    if bs_spacing is None:
        bs_spacing = wavelength
    if bs_standoff is None:
        bs_standoff = 3 * wavelength

    if atom_spacing <= 0 or bs_spacing <= 0:
        raise ValueError("spacings must be positive")
    if bs_standoff <= 0:
        raise ValueError("bs_standoff must be positive")
    if layers >= 2 and total_thickness <= 0:
        raise ValueError("total_thickness must be positive for stacked layers")

    spacing_z = total_thickness / (layers - 1) if layers >= 2 else 0.0

    # centered grid, x fastest so index-adjacent atoms are x-neighbours
    xs = (np.arange(atoms_x) - (atoms_x - 1) / 2) * atom_spacing
    ys = (np.arange(atoms_y) - (atoms_y - 1) / 2) * atom_spacing
    gx, gy = np.meshgrid(xs, ys)
    base = np.column_stack([gx.ravel(), gy.ravel()])

    atom_positions = []
    for l in range(layers):
        z = np.full(base.shape[0], l * spacing_z)
        atom_positions.append(np.column_stack([base, z]))

    ax = (np.arange(bs_antennas) - (bs_antennas - 1) / 2) * bs_spacing
    z_bs = (layers - 1) * spacing_z + bs_standoff
    antenna_positions = np.column_stack(
        [ax, np.zeros(bs_antennas), np.full(bs_antennas, z_bs)]
    )

    return SimGeometry(
        wavelength=wavelength,
        layers=layers,
        atoms_x=atoms_x,
        atoms_y=atoms_y,
        atom_spacing=atom_spacing,
        total_thickness=total_thickness if layers >= 2 else 0.0,
        inter_layer_spacing=spacing_z,
        bs_antennas=bs_antennas,
        bs_spacing=bs_spacing,
        bs_standoff=bs_standoff,
        atom_positions=atom_positions,
        antenna_positions=antenna_positions,
    )


@dataclass
class UserLayout:
    """Transmitter placement and large-scale statistics.

    Angles in radians, distances in meters. ``reference_gain`` is the
    linear pathloss at 1 m, so the per-atom average channel power of
    user k is reference_gain * distance_k ** -pathloss_exponent.
    """

    azimuth: np.ndarray
    elevation: np.ndarray
    distance: np.ndarray
    rician_factor: float = 1.0
    pathloss_exponent: float = 2.2
    reference_gain: float = 1e-3

    def __post_init__(self):
        self.azimuth = np.atleast_1d(np.asarray(self.azimuth, dtype=float))
        self.elevation = np.atleast_1d(np.asarray(self.elevation, dtype=float))
        self.distance = np.atleast_1d(np.asarray(self.distance, dtype=float))
        if not (len(self.azimuth) == len(self.elevation) == len(self.distance)):
            raise ValueError("azimuth/elevation/distance lengths differ")
        if np.any(self.distance <= 0):
            raise ValueError("distances must be positive")

    @property
    def count(self) -> int:
        return len(self.distance)

    def pathloss(self, k: int) -> float:
        return self.reference_gain * float(self.distance[k]) ** (-self.pathloss_exponent)


def draw_user_layout(
    count: int,
    rng: np.random.Generator,
    azimuth_range=AZIMUTH_RANGE,
    elevation_range=ELEVATION_RANGE,
    distance_range=DISTANCE_RANGE,
    rician_factor: float = 1.0,
    pathloss_exponent: float = 2.2,
    reference_gain: float = 1e-3,
) -> UserLayout:
    """Draw user positions uniformly over the placement region."""
    if count < 1:
        raise ValueError("need at least one user")
    return UserLayout(
        azimuth=rng.uniform(*azimuth_range, size=count),
        elevation=rng.uniform(*elevation_range, size=count),
        distance=rng.uniform(*distance_range, size=count),
        rician_factor=rician_factor,
        pathloss_exponent=pathloss_exponent,
        reference_gain=reference_gain,
    )
