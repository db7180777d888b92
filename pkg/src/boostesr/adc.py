"""Measurement front end: additive Gaussian noise, then a uniform ADC."""

from __future__ import annotations

import numpy as np

CHANNELS = ("i_l", "v_out", "v_c", "v_mos")


def quantize(x, bits, lo, hi):
    """Mid-tread uniform quantizer over ``[lo, hi]`` with clipping.

    Output codes are ``lo + n*q`` for ``n`` in ``0 .. 2**bits - 1`` and
    ``q = (hi - lo) / 2**bits``.
    """
    levels = 2 ** int(bits)
    q = (hi - lo) / levels
    code = np.clip(np.round((np.asarray(x, dtype=float) - lo) / q), 0, levels - 1)
    return lo + code * q


def ac_coupled_quantize(x, bits, lo, hi, dc, gain):
    """Quantize the AC part of ``x`` after removing ``dc`` and amplifying.

    The amplified signal is centred on the converter range, quantized, then
    scaled back and the DC level restored.
    """
    mid = 0.5 * (lo + hi)
    y = quantize(mid + gain * (np.asarray(x, dtype=float) - dc), bits, lo, hi)
    return (y - mid) / gain + dc


def measure(frame, cfg, rng):
    """Apply the configured noise and ADC model to a clean frame."""
    channels = {}
    for name in CHANNELS:
        x = getattr(frame, name).copy()
        sigma = cfg.noise_sigma.get(name, 0.0)
        if sigma > 0:
            x = x + rng.normal(0.0, sigma, size=x.shape)
        if cfg.adc_bits:
            lo, hi = cfg.adc_fullscale[name]
            stage = cfg.ac_stage.get(name)
            if stage is None:
                x = quantize(x, cfg.adc_bits, lo, hi)
            else:
                x = ac_coupled_quantize(x, cfg.adc_bits, lo, hi, stage.dc, stage.gain)
        channels[name] = x
    return frame.with_channels(**channels)
