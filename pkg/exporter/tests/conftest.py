"""Shared fixtures: hub reachability probe and small quantized models."""

import socket
import warnings

import numpy as np
import pytest


def hub_reachable(host: str = "download.pytorch.org", port: int = 443) -> bool:
    s = socket.socket()
    s.settimeout(2)
    try:
        s.connect((host, port))
        return True
    except OSError:
        return False
    finally:
        s.close()


HUB_AVAILABLE = hub_reachable()


@pytest.fixture(scope="session")
def hub():
    """Gate for tests that download pretrained CNN checkpoints."""
    if not HUB_AVAILABLE:
        pytest.skip(
            "model hub unreachable from this environment (DNS/connect to "
            "download.pytorch.org fails); pretrained-checkpoint comparisons need it"
        )


@pytest.fixture(scope="session")
def hf_hub():
    """Gate for tests that download LLM checkpoints."""
    if not hub_reachable("huggingface.co"):
        pytest.skip(
            "model hub unreachable from this environment (DNS/connect to "
            "huggingface.co fails); LLM checkpoint comparisons need it"
        )


@pytest.fixture
def no_hub():
    """Gate for tests that need a download attempt to fail."""
    if HUB_AVAILABLE:
        pytest.skip("hub is reachable; the download-failure path cannot trigger")


@pytest.fixture(scope="session")
def quantized_cnn():
    """A small eager-mode statically quantized conv+fc model, seeded."""
    import torch
    import torch.nn as nn

    class Tiny(nn.Module):
        def __init__(self):
            super().__init__()
            self.quant = torch.ao.quantization.QuantStub()
            self.conv1 = nn.Conv2d(3, 8, 3)
            self.relu = nn.ReLU()
            self.conv2 = nn.Conv2d(8, 4, 3)
            self.fc = nn.Linear(4, 10)
            self.dequant = torch.ao.quantization.DeQuantStub()

        def forward(self, x):
            x = self.quant(x)
            x = self.relu(self.conv1(x))
            x = self.relu(self.conv2(x))
            x = x.mean(dim=(2, 3))
            x = self.fc(x)
            return self.dequant(x)

    torch.manual_seed(7)
    model = Tiny().eval()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model.qconfig = torch.ao.quantization.get_default_qconfig("fbgemm")
        prepared = torch.ao.quantization.prepare(model)
        prepared(torch.randn(4, 3, 12, 12))
        return torch.ao.quantization.convert(prepared)


def planted_int32(shape, plant, seed):
    """int32 tensor of small values with `plant` placed in every 32x32 tile."""
    gen = np.random.Generator(np.random.PCG64(seed))
    arr = gen.integers(-(2 ** 20), 2 ** 20, shape).astype(np.int32)
    for r in range(0, shape[0], 32):
        for c in range(0, shape[1], 32):
            arr[r, c] = plant
    return arr


@pytest.fixture(scope="session")
def llm_weight_map():
    """name->tensor mapping shaped like one decoder block of a quantized LLM.

    Every 32x32 tile's bottleneck is planted just under full scale, so MSB
    truncation yields bit sparsities of exactly 1/2 (2-bit), 1/8 (4-bit), and
    1/128 (8-bit).
    """
    plant = 127 * 2 ** 24 + 5
    return {
        "layers.0.self_attn.q_proj.weight": planted_int32((64, 64), plant, 1),
        "layers.0.self_attn.o_proj.weight": planted_int32((64, 64), plant, 2),
        "layers.0.mlp.fc1.weight": planted_int32((64, 64), plant, 3),
        "layers.0.mlp.fc2.weight": planted_int32((64, 64), plant, 4),
        "layers.1.self_attn.q_proj.weight": planted_int32((64, 64), plant, 5),
        "layers.0.final_norm.weight": np.ones(64, dtype=np.int32),
    }


@pytest.fixture(scope="session")
def int_llm_module():
    """Torch module whose q/k projections emit integer activations."""
    import torch
    import torch.nn as nn

    class IntProj(nn.Module):
        def __init__(self, scale, size):
            super().__init__()
            gen = torch.Generator().manual_seed(scale)
            w = torch.randint(-(2 ** 20), 2 ** 20, (size, size),
                              generator=gen, dtype=torch.int32)
            self.register_buffer("weight", w)
            self.scale = scale

        def forward(self, x):
            return x * self.scale

    class Attn(nn.Module):
        def __init__(self):
            super().__init__()
            self.q_proj = IntProj(3, 16)
            self.k_proj = IntProj(5, 16)

        def forward(self, x):
            return self.q_proj(x) + self.k_proj(x)

    class Block(nn.Module):
        def __init__(self):
            super().__init__()
            self.self_attn = Attn()

        def forward(self, x):
            return self.self_attn(x)

    class Model(nn.Module):
        def __init__(self):
            super().__init__()
            self.layers = nn.ModuleList([Block()])

        def forward(self, x):
            return self.layers[0](x)

    return Model().eval()
