import pytest
import torch

from fktrainer.model import ModelConfig, OperatorModel, parameter_count


def test_output_shape_and_determinism():
    torch.manual_seed(0)
    model = OperatorModel(ModelConfig(resolution=64))
    u0 = torch.randn(5, 64)
    t = torch.full((5,), 0.4)
    a = model(u0, t)
    b = model(u0, t)
    assert a.shape == (5, 64)
    assert torch.equal(a, b)


def test_time_channel_matters():
    torch.manual_seed(0)
    model = OperatorModel(ModelConfig(resolution=64))
    u0 = torch.randn(2, 64)
    a = model(u0, torch.full((2,), 0.2))
    b = model(u0, torch.full((2,), 1.8))
    assert not torch.allclose(a, b)


def test_parameter_budget():
    n = parameter_count(OperatorModel(ModelConfig()))
    assert 30_000 < n < 250_000  # small operator, paper-scale order of magnitude


def test_modes_validated():
    with pytest.raises(ValueError):
        ModelConfig(modes=40, resolution=64)


def test_predict_frames_stacks_times():
    torch.manual_seed(1)
    model = OperatorModel(ModelConfig(resolution=64))
    u0 = torch.randn(3, 64)
    out = model.predict_frames(u0, [0.2, 0.4])
    assert out.shape == (2, 3, 64)
    single = model(u0, torch.full((3,), 0.4))
    assert torch.allclose(out[1], single)
