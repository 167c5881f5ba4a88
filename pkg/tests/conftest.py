import math

import numpy as np
import pytest


def random_smooth_pair(rng: np.random.Generator) -> tuple[str, str]:
    """Expression strings for smooth (C-infinity) profiles with O(1) size."""
    a = rng.uniform(-1, 1, 6)
    k = rng.uniform(0.3, 2.0, 3)
    p = rng.uniform(0, 2 * math.pi, 2)
    s = rng.uniform(0.2, 1.0, 2)
    f = (f"{a[0]:.6f}*sin({k[0]:.6f}*x+{p[0]:.6f}) + {a[1]:.6f}*exp(-{s[0]:.6f}*x^2)"
         f" + {a[2]:.6f}")
    g = (f"{a[3]:.6f}*cos({k[1]:.6f}*x) + {a[4]:.6f}*x*exp(-{s[1]:.6f}*(x-{p[1] / 3:.6f})^2)"
         f" + {a[5]:.6f}*sin({k[2]:.6f}*x)^2")
    return f, g


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
