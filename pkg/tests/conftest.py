import numpy as np

from desatkit import SampledTrace


def make_trace(values, period=1.0, quality=None, start=0.0):
    return SampledTrace(
        np.asarray(values, dtype=float),
        start_epoch=start,
        sample_period=period,
        quality=None if quality is None else np.asarray(quality, dtype=float),
    )


def square_dip(baseline, depth, width, pre=30, post=30, period=1.0):
    """A flat trace with one rectangular dip of the given sample width."""
    values = [baseline] * pre + [baseline - depth] * width + [baseline] * post
    return make_trace(values, period=period)


def event_tuple(ev):
    return (
        ev.onset_idx,
        ev.nadir_idx,
        ev.recovery_idx,
        ev.baseline,
        ev.nadir_value,
        ev.depth,
        ev.duration,
    )
