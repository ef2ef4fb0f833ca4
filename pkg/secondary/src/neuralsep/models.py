"""Network architectures: shift classifier and 1-D U-Net separator.

Both consume stacked real/imaginary channels of the complex baseband
mixture.  The synchronizer squares a wide first convolution (its kernel
spans the interference correlation length, so squaring exposes the
cyclic-prefix lag products) and folds time onto the cyclic phase before a
circular convolutional head scores the candidate shifts.  The separator is
a 1-D U-Net with a long first kernel; conditional separation is a shift
embedding injected at the stem and bottleneck (one full replica per shift
is available as a switch for small shift counts).
"""

from __future__ import annotations

import torch
from torch import nn


class SyncNet(nn.Module):
    """Classifier over the interference cyclic shift.

    Two convolutional fronts feed squared (energy) features: a dilated
    two-tap kernel whose span equals the interference correlation length
    (it exposes the cyclic-prefix lag products directly) and a wide dense
    kernel free to learn filtered variants.  Energies are averaged over
    whole cyclic periods, collapsing time onto the K_b candidate phases.
    The phase profile translates with minus the shift, so the axis is
    flipped before a circular-convolution head whose full-period template
    is shared across all rotations; its output is one score per shift.
    """

    def __init__(
        self,
        input_len: int = 640,
        k_b: int = 80,
        corr_lag: int = 64,
        pair_channels: int = 16,
        wide_kernel: int = 97,
        wide_channels: int = 16,
        head_width: int = 48,
    ) -> None:
        super().__init__()
        if input_len % k_b != 0:
            raise ValueError("input_len must be a multiple of the cyclic period")
        self.input_len = input_len
        self.k_b = k_b
        self.corr_lag = corr_lag
        self.pair = nn.Conv1d(2, pair_channels, 2, dilation=corr_lag, padding=corr_lag // 2)
        self.wide = nn.Conv1d(2, wide_channels, wide_kernel, padding=wide_kernel // 2)
        c = pair_channels + wide_channels
        self.norm = nn.BatchNorm1d(c)
        span = k_b - 1 if k_b % 2 == 0 else k_b
        self.head1 = nn.Conv1d(c, head_width, span, padding=span // 2, padding_mode="circular")
        self.head2 = nn.Conv1d(head_width, head_width, 5, padding=2, padding_mode="circular")
        self.head3 = nn.Conv1d(head_width, 1, span, padding=span // 2, padding_mode="circular")

    def _fold(self, z: torch.Tensor) -> torch.Tensor:
        energy = z * z
        full = (energy.shape[-1] // self.k_b) * self.k_b
        per = energy[..., :full].view(*energy.shape[:2], -1, self.k_b)
        return per.mean(dim=2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] != self.input_len:
            raise ValueError(f"expected input length {self.input_len}, got {x.shape[-1]}")
        h = torch.cat([self._fold(self.pair(x)), self._fold(self.wide(x))], dim=1)
        # the energy ridge sits at phase (-shift + const): flip so it
        # translates with +shift, which circular convolution can track
        h = torch.flip(h, [-1])
        h = self.norm(h)
        h = torch.relu(self.head1(h))
        h = torch.relu(self.head2(h))
        return self.head3(h).squeeze(1)

    def probabilities(self, x: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.forward(x), dim=-1)


class _Down(nn.Module):
    def __init__(self, c_in: int, c_out: int) -> None:
        super().__init__()
        self.pool = nn.Conv1d(c_in, c_out, 9, stride=2, padding=4)
        self.conv = nn.Conv1d(c_out, c_out, 9, padding=4)

    def forward(self, x):
        x = torch.nn.functional.gelu(self.pool(x))
        return torch.nn.functional.gelu(self.conv(x))


class _Up(nn.Module):
    def __init__(self, c_in: int, c_out: int) -> None:
        super().__init__()
        self.up = nn.ConvTranspose1d(c_in, c_out, 4, stride=2, padding=1)
        self.conv = nn.Conv1d(2 * c_out, c_out, 9, padding=4)

    def forward(self, x, skip):
        x = torch.nn.functional.gelu(self.up(x))
        x = torch.cat([x, skip], dim=1)
        return torch.nn.functional.gelu(self.conv(x))


class UNet1d(nn.Module):
    """Separator mapping a mixture window to the signal-of-interest window."""

    def __init__(
        self,
        input_len: int = 2560,
        k_b: int = 80,
        first_kernel: int = 101,
        base: int = 14,
        depth: int = 3,
        conditional: bool = False,
        embed_dim: int = 24,
    ) -> None:
        super().__init__()
        if input_len % (1 << depth) != 0:
            raise ValueError("input_len must be divisible by 2**depth")
        self.input_len = input_len
        self.k_b = k_b
        self.conditional = conditional
        self.stem = nn.Conv1d(2, base, first_kernel, padding=first_kernel // 2)
        chans = [base * (1 << d) for d in range(depth + 1)]
        self.downs = nn.ModuleList(_Down(chans[d], chans[d + 1]) for d in range(depth))
        self.bottleneck = nn.Conv1d(chans[-1], chans[-1], 9, padding=4)
        self.ups = nn.ModuleList(
            _Up(chans[d + 1], chans[d]) for d in reversed(range(depth))
        )
        self.out = nn.Conv1d(base, 2, 9, padding=4)
        if conditional:
            self.embed = nn.Embedding(k_b, embed_dim)
            self.embed_stem = nn.Linear(embed_dim, base)
            self.embed_mid = nn.Linear(embed_dim, chans[-1])

    def forward(self, x: torch.Tensor, shift: torch.Tensor | None = None) -> torch.Tensor:
        if x.shape[-1] != self.input_len:
            raise ValueError(f"expected input length {self.input_len}, got {x.shape[-1]}")
        if self.conditional:
            if shift is None:
                raise ValueError("conditional separator needs a shift per record")
            e = self.embed(shift)
        h = torch.nn.functional.gelu(self.stem(x))
        if self.conditional:
            h = h + self.embed_stem(e).unsqueeze(-1)
        skips = [h]
        for down in self.downs:
            h = down(h)
            skips.append(h)
        h = torch.nn.functional.gelu(self.bottleneck(h))
        if self.conditional:
            h = h + self.embed_mid(e).unsqueeze(-1)
        for up, skip in zip(self.ups, reversed(skips[:-1])):
            h = up(h, skip)
        return self.out(h)


class ReplicatedUNet(nn.Module):
    """One full separator instance per candidate shift (small shift counts)."""

    def __init__(self, k_b: int, **unet_kwargs) -> None:
        super().__init__()
        unet_kwargs = dict(unet_kwargs, k_b=k_b, conditional=False)
        self.k_b = k_b
        self.replicas = nn.ModuleList(UNet1d(**unet_kwargs) for _ in range(k_b))

    def forward(self, x: torch.Tensor, shift: torch.Tensor) -> torch.Tensor:
        out = torch.empty(x.shape[0], 2, x.shape[-1], dtype=x.dtype, device=x.device)
        for m in range(self.k_b):
            sel = shift == m
            if torch.any(sel):
                out[sel] = self.replicas[m](x[sel])
        return out
