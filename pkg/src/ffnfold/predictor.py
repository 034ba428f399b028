"""Quantized copy of ``w1`` used to flag neurons whose input leaves its range."""

from dataclasses import dataclass

import numpy as np

from . import _binio
from .linalg import as_matrix

SUPPORTED_BITS = (2, 3, 4, 8)
BYPASS_BITS = 32
MIN_SCALE = 1e-12


@dataclass(frozen=True, eq=False)
class Predictor:
    """Per-column asymmetric uniform quantization of ``w1`` (shape ``d x h``).

    ``codes`` has shape ``(h, d)``: one row per neuron. With ``bits == 32`` the
    predictor is a bypass holding the weights themselves (float32 on disk).
    """

    codes: np.ndarray
    scale: np.ndarray
    zero: np.ndarray
    bits: int

    @property
    def h(self):
        return self.codes.shape[0]

    @property
    def d(self):
        return self.codes.shape[1]

    @property
    def bypass(self):
        return self.bits == BYPASS_BITS

    def dequantize(self):
        """Reconstructed ``w1`` (``d x h``, float64)."""
        if self.bypass:
            return np.ascontiguousarray(self.codes.T, dtype=np.float64)
        w = self.zero[:, None].astype(np.float64) + self.codes * self.scale[:, None].astype(np.float64)
        return np.ascontiguousarray(w.T)

    def pre_activations(self, x, b1):
        return as_matrix(x) @ self.dequantize() + b1

    def n_params(self):
        """Storage in float32-equivalent parameters (codes only)."""
        return self.h * self.d * self.bits / 32


def build_predictor(w1, bits):
    """Round-to-nearest quantization; ``bits=32`` keeps the exact weights."""
    w1 = as_matrix(w1, "w1")
    cols = w1.T
    h, d = cols.shape
    if bits == BYPASS_BITS:
        ones = np.ones(h, dtype=np.float32)
        return Predictor(cols.copy(), ones, np.zeros(h, dtype=np.float32), bits)
    if bits not in SUPPORTED_BITS:
        raise ValueError(f"bits must be one of {SUPPORTED_BITS} or {BYPASS_BITS}, got {bits}")
    levels = 2 ** bits - 1
    lo = cols.min(axis=1)
    hi = cols.max(axis=1)
    zero = lo.astype(np.float32)
    scale = np.maximum((hi - lo) / levels, MIN_SCALE).astype(np.float32)
    q = np.rint((cols - zero[:, None].astype(np.float64)) / scale[:, None].astype(np.float64))
    codes = np.clip(q, 0, levels).astype(np.uint8)
    return Predictor(codes, scale, zero, bits)


def predict_flags(pred, b1, x, approx_l1, approx_l2, guard=0.0):
    """Boolean ``(k, h)`` mask, True where the estimated input is outside ``[l1, l2)``.

    ``guard`` shrinks every range symmetrically before the test, flagging more.
    """
    z_hat = pred.pre_activations(x, b1)
    return ~((approx_l1 + guard <= z_hat) & (z_hat < approx_l2 - guard))


def flag_stats(predicted, truth):
    """Precision/recall of predicted out-of-range flags against ground truth."""
    predicted = np.asarray(predicted, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    tp = int(np.sum(predicted & truth))
    fp = int(np.sum(predicted & ~truth))
    fn = int(np.sum(~predicted & truth))
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return {"precision": precision, "recall": recall, "false_negative_rate": 1.0 - recall,
            "true_positives": tp, "false_positives": fp, "false_negatives": fn}


def pack_codes(codes, bits):
    """Pack one column's codes, first code in the lowest bits of each byte."""
    codes = np.asarray(codes, dtype=np.uint8)
    if bits in (3, 8):
        return codes.tobytes()
    per_byte = 8 // bits
    padded = np.zeros(-(-codes.size // per_byte) * per_byte, dtype=np.uint8)
    padded[:codes.size] = codes
    groups = padded.reshape(-1, per_byte).astype(np.uint16)
    shifts = np.arange(per_byte, dtype=np.uint16) * bits
    return (groups << shifts).sum(axis=1).astype(np.uint8).tobytes()


def unpack_codes(raw, bits, count):
    raw = np.frombuffer(bytes(raw), dtype=np.uint8)
    if bits in (3, 8):
        return raw[:count].copy()
    per_byte = 8 // bits
    shifts = np.arange(per_byte, dtype=np.uint8) * bits
    vals = (raw[:, None] >> shifts) & np.uint8(2 ** bits - 1)
    return vals.reshape(-1)[:count].astype(np.uint8)


def packed_size(bits, d):
    if bits == BYPASS_BITS:
        return 4 * d
    if bits in (3, 8):
        return d
    return -(-d // (8 // bits))


def predictor_to_bytes(pred):
    parts = []
    for n in range(pred.h):
        parts.append(_binio.le_bytes(pred.scale[n], np.float32))
        parts.append(_binio.le_bytes(pred.zero[n], np.float32))
        if pred.bypass:
            parts.append(_binio.le_bytes(pred.codes[n], np.float32))
        else:
            parts.append(pack_codes(pred.codes[n], pred.bits))
    return b"".join(parts)


def read_predictor(reader, bits, d, h):
    scale = np.empty(h, dtype=np.float32)
    zero = np.empty(h, dtype=np.float32)
    codes = np.empty((h, d), dtype=np.float64 if bits == BYPASS_BITS else np.uint8)
    for n in range(h):
        scale[n] = reader.array(np.float32, 1)[0]
        zero[n] = reader.array(np.float32, 1)[0]
        if bits == BYPASS_BITS:
            codes[n] = reader.array(np.float32, d)
        else:
            codes[n] = unpack_codes(reader.take(packed_size(bits, d)), bits, d)
    return Predictor(codes, scale, zero, bits)
