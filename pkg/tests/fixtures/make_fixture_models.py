"""Generate the committed exported-program fixture models.

Run from anywhere: ``python tests/fixtures/make_fixture_models.py``.
The fixtures are tiny on purpose; they exercise the model-backend
contract, not binarization quality.
"""

from pathlib import Path

import torch
import torch.nn as nn

HERE = Path(__file__).parent


class TinyConv(nn.Module):
    """Two seeded conv layers with a sigmoid head; shape-preserving."""

    def __init__(self):
        super().__init__()
        torch.manual_seed(1234)
        self.c1 = nn.Conv2d(1, 4, 3, padding=1)
        self.c2 = nn.Conv2d(4, 1, 3, padding=1)

    def forward(self, input: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.c2(torch.relu(self.c1(input))))


class Const05(nn.Module):
    """All-zero conv weights: sigmoid(0) = 0.5 everywhere."""

    def __init__(self):
        super().__init__()
        self.c = nn.Conv2d(1, 1, 3, padding=1)
        nn.init.zeros_(self.c.weight)
        nn.init.zeros_(self.c.bias)

    def forward(self, input: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.c(input))


class Pool256(nn.Module):
    """Emits 256x256 maps regardless of input side: violates the contract."""

    def forward(self, input: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(nn.functional.adaptive_avg_pool2d(input, 256))


def export(module: nn.Module, name: str, side: int = 512) -> None:
    batch = torch.export.Dim("n")
    program = torch.export.export(
        module.eval(),
        (torch.zeros(2, 1, side, side),),
        dynamic_shapes={"input": {0: batch}},
    )
    torch.export.save(program, str(HERE / name))
    print("wrote", HERE / name)


def main():
    export(TinyConv(), "tinyconv_512.pt2")
    export(Const05(), "const05_512.pt2")
    export(Pool256(), "pool256_512.pt2")


if __name__ == "__main__":
    main()
