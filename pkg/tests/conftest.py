import numpy as np
import pytest
from hypothesis import settings

from edfopt.edf import Center
from edfopt.problem import builtin_corpus, evaluate, get_builtin

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

CORPUS_NAMES = ("TOY1D", "QP2D", "QP5D", "BOXFACE")
# f strictly convex, so the dual function is finite for every lam > 0
STRICTLY_CONVEX = ("TOY1D", "QP2D", "QP5D")


@pytest.fixture(params=CORPUS_NAMES)
def corpus_problem(request):
    return get_builtin(request.param)


@pytest.fixture
def toy():
    return get_builtin("TOY1D")


@pytest.fixture
def qp2d():
    return get_builtin("QP2D")


def default_center(p, gamma=1e-4):
    return Center.from_problem(p, p.interior_point, gamma)


DOMAIN_MARGIN = 0.05
# k c + 1 lower bound; the log term's third derivative grows like k^2 / (k c + 1)^3
SHIFTED_MARGIN = 0.5


def random_domain_points(p, center, count, rng, k=None):
    """Points near the center inside the domain by at least ``DOMAIN_MARGIN``.

    The margin applies to ``f(y) - f(x)`` and to ``c``; when ``k`` is given,
    ``k c + 1 >= SHIFTED_MARGIN`` replaces the constraint margin, so slightly
    infeasible points are sampled too.  Central differences lose accuracy
    closer to the logarithmic singularities.
    """
    pts = []
    base = np.asarray(center.y)
    tries = 0
    while len(pts) < count:
        tries += 1
        assert tries < 100000
        x = base + 0.2 * rng.standard_normal(p.n)
        ev = evaluate(p, x, order=0)
        if center.f_y - ev.f_val < DOMAIN_MARGIN:
            continue
        if k is None and np.any(ev.c_vals < DOMAIN_MARGIN):
            continue
        if k is not None and np.any(k * ev.c_vals + 1 < SHIFTED_MARGIN):
            continue
        pts.append(x)
    return pts


def all_problems():
    return builtin_corpus()
