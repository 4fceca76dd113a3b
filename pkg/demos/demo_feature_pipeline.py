"""Follow one synthetic recording through the full feature pipeline.

Recording -> channel selection -> resample -> 8 s segments -> wavelet
packet statistics -> normalized 96-vectors -> one 4032-value row.
"""

import numpy as np

from eegwpd import features, preprocess, signal_io
from eegwpd.wavelet import SELECTED_PATHS

rec = signal_io.synth_recording("abnormal", duration_s=120, seed=11)
print(f"recording {rec.id!r}: {len(rec.channels)} channels x {rec.n_samples} samples "
      f"at {rec.sample_rate} Hz")

rec = preprocess.select_standard_channels(rec)
rec = preprocess.resample(rec)
seg = preprocess.segment(rec)
E, S, n = seg.segments.shape
print(f"segments: {E} channels x {S} windows x {n} samples")

tensor = features.extract_features(seg)
print(f"feature tensor: {tensor.data.shape} (channel x segment x statistic)")

row = features.aggregate(tensor)
print(f"aggregated vector: {row.shape[0]} values "
      f"(21 channels x 2 half-medians x 96 statistics)")

# The statistic layout is node-major: 16 sub-band nodes x (MAV, AVP, SD,
# RMAV, SKEW, KURT). Peek at the low-frequency approximation chain of one
# channel, where the synthetic 3 Hz bursts concentrate their power.
raw = features.extract_features(seg, normalize=False)
chan = 8  # C3
avp = raw.data[chan, :, features.STAT_NAMES.index("avp")::features.N_STATS]
print("\nchannel C3 average power per node (segment means):")
for path in ("D", "DD", "DDD", "DDDD", "A", "AA", "AAA", "AAAA", "AAAAA"):
    idx = SELECTED_PATHS.index(path)
    print(f"  {path:6s} {np.mean(avp[:, idx]):10.3f}")
