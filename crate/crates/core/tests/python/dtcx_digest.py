"""Prints SHA-256 of the (I, Q) float32 payload of each DTCX file given."""

import hashlib
import sys

import numpy as np

sys.path.insert(0, sys.argv[1])
from tmds_leak_io import read_dtcx  # noqa: E402

for path in sys.argv[2:]:
    header, data = read_dtcx(path)
    iq = np.stack([data.real, data.imag], axis=-1).astype("<f4")
    print(header["rows"], header["cols"], hashlib.sha256(iq.tobytes()).hexdigest())
