import pytest

from risswpcn import ArrayGeometry, PathLossModel, SystemParams


@pytest.fixture
def default_params() -> SystemParams:
    """M=4, N=100, kappa=1, unit cascade loss, P_E=1 W."""
    return SystemParams(
        geometry=ArrayGeometry(4, 10, 10),
        kappa_h=1.0,
        kappa_g=1.0,
        pathloss=PathLossModel.normalized(),
    )


@pytest.fixture
def strong_los_params() -> SystemParams:
    """M=4, N=100, kappa=10, unit cascade loss."""
    return SystemParams(
        geometry=ArrayGeometry(4, 10, 10),
        kappa_h=10.0,
        kappa_g=10.0,
        pathloss=PathLossModel.normalized(),
    )


def make_params(m=4, nx=10, ny=10, kappa_h=1.0, kappa_g=1.0, normalized=True, **kw):
    pl = PathLossModel.normalized() if normalized else PathLossModel()
    return SystemParams(
        geometry=ArrayGeometry(m, nx, ny),
        kappa_h=kappa_h,
        kappa_g=kappa_g,
        pathloss=kw.pop("pathloss", pl),
        **kw,
    )
