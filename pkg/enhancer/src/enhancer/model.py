"""A deliberately tiny residual 3D U-Net for volumetric deblurring.

Two resolution levels, single-channel input, residual output: the network
predicts a correction added to its input, which makes mild-deblur tasks easy
to learn at desk scale.
"""
from __future__ import annotations

import torch
import torch.nn as nn


def _block(cin: int, cout: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv3d(cin, cout, 3, padding=1),
        nn.ReLU(inplace=True),
        nn.Conv3d(cout, cout, 3, padding=1),
        nn.ReLU(inplace=True),
    )


class TinyUNet3D(nn.Module):
    def __init__(self, base_channels: int = 8):
        super().__init__()
        c = base_channels
        self.enc1 = _block(1, c)
        self.down = nn.Conv3d(c, 2 * c, 2, stride=2)
        self.enc2 = _block(2 * c, 2 * c)
        self.up = nn.ConvTranspose3d(2 * c, c, 2, stride=2)
        self.dec = _block(2 * c, c)
        self.out = nn.Conv3d(c, 1, 1)
        # zero-init the correction head: the untrained network is the identity
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        e1 = self.enc1(x)
        e2 = self.enc2(self.down(e1))
        d = self.dec(torch.cat([self.up(e2), e1], dim=1))
        return x + self.out(d)  # residual correction
