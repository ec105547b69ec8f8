import numpy as np
import pytest

from mimo_papr import channel, model


@pytest.fixture
def desk_config():
    return model.SystemConfig.with_centered_tones(M=32, K=4, N=64, n_data=52, D=4)


@pytest.fixture
def tiny_config():
    # small enough for dense oracles everywhere
    return model.SystemConfig.with_centered_tones(M=8, K=2, N=16, n_data=12, D=3)


@pytest.fixture
def tiny_problem(tiny_config):
    """Channel, symbols, and target stack for the tiny configuration."""
    rng = np.random.default_rng(1234)
    taps = channel.draw_taps(tiny_config.K, tiny_config.M, tiny_config.D, rng)
    H = channel.freq_response(taps, tiny_config.N)
    S = model.generate_symbols(tiny_config, rng)
    lay = model.RealStackLayout(tiny_config)
    return {"config": tiny_config, "taps": taps, "H": H, "S": S,
            "layout": lay, "y": lay.target_from_symbols(S)}
