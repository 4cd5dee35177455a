import sys

import numpy as np
import pytest

from asp_toolbox.bodies import Ball, Ellipsoid, TrigSupport2D, random_ellipsoid, random_trig_body, unit_square
from asp_toolbox.quadrature import rule_circle, rule_sphere3


@pytest.fixture
def rule2():
    return rule_circle(512)


@pytest.fixture
def rule3():
    return rule_sphere3(32)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def trig_body():
    """
    A fixed non-symmetric C²₊ body, h(θ) = 1 + 0.1 cos 2θ + 0.03 sin 3θ.
    """
    return TrigSupport2D(1.0, [0.0, 0.1, 0.0], [0.0, 0.0, 0.03])


@pytest.fixture
def corpus2(rng):
    """
    A seeded corpus of planar bodies: trigonometric bodies and ellipses.
    """
    bodies = [random_trig_body(rng) for _ in range(4)]
    bodies += [random_ellipsoid(rng, 2) for _ in range(3)]
    bodies += [Ellipsoid.diag(2, 3), Ball(1.5)]
    return bodies


@pytest.fixture
def corpus3(rng):
    return [random_ellipsoid(rng, 3) for _ in range(3)] + [Ball(1.0, dimension=3)]


@pytest.fixture
def square():
    return unit_square()


@pytest.fixture
def square_weights():
    from asp_toolbox.illumination import example_weights

    return example_weights()


@pytest.fixture
def quadrant_weights():
    from asp_toolbox.illumination import quadrant_disk

    return quadrant_disk()


@pytest.fixture
def reset_argv():
    argv = list(sys.argv)
    yield
    sys.argv = argv
