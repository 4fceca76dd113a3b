"""EEG normal/abnormal classification with wavelet-packet features and
gradient-boosted trees.

Submodules:
  signal_io   EDF/CSV ingestion and synthetic recordings
  preprocess  channel selection, 250 Hz resampling, 8 s segmentation
  wavelet     db4 filter bank and wavelet packet decomposition
  features    sub-band statistics, normalization, median aggregation
  gbdt        histogram gradient boosting (training, GOSS, persistence)
  evaluation  confusion matrix, metrics, Venn overlap
  cli         command-line pipeline front end
"""

__version__ = "0.1.0"

from . import errors, evaluation, features, gbdt, preprocess, signal_io, wavelet  # noqa: F401
