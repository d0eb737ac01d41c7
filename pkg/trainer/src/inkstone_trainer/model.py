"""Attention U-Net for patch-wise binarization.

Four-level encoder/decoder; attention gates modulate each encoder skip
with the upsampled decoder feature before concatenation, suppressing
background texture while keeping faint stroke responses. Output is a
sigmoid probability map of the input's spatial size.
"""

from __future__ import annotations

import torch
import torch.nn as nn


class ConvBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(c_in, c_out, 3, padding=1, bias=False),
            nn.BatchNorm2d(c_out),
            nn.ReLU(inplace=True),
            nn.Conv2d(c_out, c_out, 3, padding=1, bias=False),
            nn.BatchNorm2d(c_out),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.block(x)


class UpConv(nn.Module):
    def __init__(self, c_in: int, c_out: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False),
            nn.Conv2d(c_in, c_out, 3, padding=1, bias=False),
            nn.BatchNorm2d(c_out),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.block(x)


class AttentionGate(nn.Module):
    """Additive attention over a skip feature, gated by the decoder."""

    def __init__(self, c_gate: int, c_skip: int, c_inter: int):
        super().__init__()
        self.w_gate = nn.Sequential(
            nn.Conv2d(c_gate, c_inter, 1, bias=True),
            nn.BatchNorm2d(c_inter),
        )
        self.w_skip = nn.Sequential(
            nn.Conv2d(c_skip, c_inter, 1, bias=True),
            nn.BatchNorm2d(c_inter),
        )
        self.psi = nn.Sequential(
            nn.Conv2d(c_inter, 1, 1, bias=True),
            nn.BatchNorm2d(1),
            nn.Sigmoid(),
        )

    def forward(self, gate, skip):
        attn = self.psi(torch.relu(self.w_gate(gate) + self.w_skip(skip)))
        return skip * attn


class AttentionUNet(nn.Module):
    """base controls capacity: 64 for the full model, 8 for the tiny one."""

    def __init__(self, base: int = 64):
        super().__init__()
        c1, c2, c3, c4, c5 = base, base * 2, base * 4, base * 8, base * 16
        self.enc1 = ConvBlock(1, c1)
        self.enc2 = ConvBlock(c1, c2)
        self.enc3 = ConvBlock(c2, c3)
        self.enc4 = ConvBlock(c3, c4)
        self.bottleneck = ConvBlock(c4, c5)
        self.pool = nn.MaxPool2d(2)

        self.up4 = UpConv(c5, c4)
        self.att4 = AttentionGate(c4, c4, c4 // 2)
        self.dec4 = ConvBlock(c5, c4)
        self.up3 = UpConv(c4, c3)
        self.att3 = AttentionGate(c3, c3, c3 // 2)
        self.dec3 = ConvBlock(c4, c3)
        self.up2 = UpConv(c3, c2)
        self.att2 = AttentionGate(c2, c2, c2 // 2)
        self.dec2 = ConvBlock(c3, c2)
        self.up1 = UpConv(c2, c1)
        self.att1 = AttentionGate(c1, c1, max(c1 // 2, 1))
        self.dec1 = ConvBlock(c2, c1)
        self.head = nn.Conv2d(c1, 1, 1)

    def forward(self, input: torch.Tensor) -> torch.Tensor:
        e1 = self.enc1(input)
        e2 = self.enc2(self.pool(e1))
        e3 = self.enc3(self.pool(e2))
        e4 = self.enc4(self.pool(e3))
        b = self.bottleneck(self.pool(e4))

        d4 = self.up4(b)
        d4 = self.dec4(torch.cat([self.att4(d4, e4), d4], dim=1))
        d3 = self.up3(d4)
        d3 = self.dec3(torch.cat([self.att3(d3, e3), d3], dim=1))
        d2 = self.up2(d3)
        d2 = self.dec2(torch.cat([self.att2(d2, e2), d2], dim=1))
        d1 = self.up1(d2)
        d1 = self.dec1(torch.cat([self.att1(d1, e1), d1], dim=1))
        return torch.sigmoid(self.head(d1))


def build_model(tiny: bool = False) -> AttentionUNet:
    return AttentionUNet(base=8 if tiny else 64)
