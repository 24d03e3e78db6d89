import numpy as np
import pytest

from rischannel.scene import Antenna, RisPanel, RisPose, build_scene, scene_from_angles, wavelength

DBI21 = 10 ** 2.1


def ellipse_scene(panel, position, f=10.5e9, g=DBI21, d=200.0):
    """Tx/Rx on the foci (+-d/2, 0, 0); panel at ``position`` facing -y."""
    pose = RisPose.facing(position, [0, -1, 0], x_axis=[1, 0, 0])
    return build_scene(Antenna([-d / 2, 0, 0], g), Antenna([d / 2, 0, 0], g), panel, pose, f)


def steering_scene_5g4(panel=None, d2=20.0):
    """60 x 60 panel at 0.33 wavelength pitch, 5.4 GHz, Tx 20 m away at 60 deg, Rx at 45 deg."""
    f = 5.4e9
    lam = wavelength(f)
    panel = panel or RisPanel(60, 60, 0.33 * lam, 0.33 * lam)
    return panel, scene_from_angles(panel, f, 20.0, d2, np.radians(60), np.radians(45))


@pytest.fixture
def generic_scene():
    """Asymmetric 3-D geometry with unequal Tx/Rx gains."""
    panel = RisPanel(8, 6, 0.01, 0.012)
    pose = RisPose.facing([0.2, 0.1, 0.0], [0, 1, 0], [1, 0, 0])
    sc = build_scene(Antenna([-3.0, 2.0, 0.5], 5.0), Antenna([4.0, 3.0, -0.2], 2.0), panel, pose, 10e9)
    return panel, sc
