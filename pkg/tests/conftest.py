from __future__ import annotations

import numpy as np
import pytest

from slicesim.scenario import NetworkTopology, ScenarioConfig


@pytest.fixture
def topo_builder():
    """Factory for hand-built instances with a fixed gain tensor.

    ``gain[tx, rx, l]`` is given directly, so tests control every channel.
    Positions are dummies; rate code only reads the gain tensor, the
    operator map and the config.
    """

    def build(gain, num_mnos: int = 1, capacities=None, **cfg_overrides) -> NetworkTopology:
        gain = np.asarray(gain, dtype=float)
        assert gain.ndim == 3 and gain.shape[0] == gain.shape[1]
        num_sbs, _, num_slices = gain.shape
        assert num_sbs % num_mnos == 0, "builder assumes equal stations per operator"
        fields = dict(
            num_mnos=num_mnos,
            sbs_per_mno=num_sbs // num_mnos,
            num_slices=num_slices,
            capacities=(num_slices,) * num_mnos if capacities is None else capacities,
            cell_radius=100.0,
            ue_max_dist=20.0,
            wall_loss_db=0.0,
            shadow_sigma_db=0.0,
        )
        fields.update(cfg_overrides)
        cfg = ScenarioConfig(**fields)
        return NetworkTopology(
            config=cfg,
            sbs_positions=np.zeros((num_sbs, 2)),
            ue_positions=np.zeros((num_sbs, 2)),
            mno_of_sbs=np.repeat(np.arange(num_mnos), num_sbs // num_mnos),
            gain=gain,
        )

    return build
