"""Reed-Solomon coding over GF(2^w) mapped onto layered-modulation symbols.

Codes of length L <= 2^w - 1 are obtained from the narrow-sense mother code
of length 2^w - 1 and dimension D by truncating parity positions; decoding
treats the truncated positions as erasures, so the punctured code stays MDS
with d_min = L - D + 1 and corrects t = floor((L - D) / 2) symbol errors.
Decoding is bounded-distance hard decision via syndromes and the extended
Euclidean (Sugiyama) solver with an erasure locator; failure is reported as
a value, never raised.

One R-bit channel symbol carries R/w consecutive code symbols (big-endian:
the first symbol lands in the most significant bits).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Conventional primitive polynomials (lowest-weight, as published in standard
# coding tables); recorded in run manifests for reproducibility.
PRIMITIVE_POLYS = {
    2: 0x7, 3: 0xB, 4: 0x13, 5: 0x25, 6: 0x43, 7: 0x89, 8: 0x11D,
    9: 0x211, 10: 0x409, 11: 0x805, 12: 0x1053, 13: 0x201B, 14: 0x4443,
    15: 0x8003, 16: 0x1100B,
}


class GaloisField:
    """GF(2^w) arithmetic through exp/log tables, 2 <= w <= 16."""

    def __init__(self, width: int, primitive_poly: int | None = None):
        if not 2 <= width <= 16:
            raise ValueError("field width must be in [2, 16]")
        self.width = width
        self.order = 1 << width
        self.poly = primitive_poly if primitive_poly is not None else PRIMITIVE_POLYS[width]
        n = self.order - 1
        exp = np.zeros(2 * n, dtype=np.int64)
        log = np.full(self.order, -1, dtype=np.int64)
        x = 1
        for i in range(n):
            if log[x] != -1:
                raise ValueError(f"0x{self.poly:x} is not primitive for GF(2^{width})")
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.order:
                x ^= self.poly
        if x != 1:
            raise ValueError(f"0x{self.poly:x} is not primitive for GF(2^{width})")
        exp[n:] = exp[:n]
        self.exp = exp
        self.log = log

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in GF(2^w)")
        return int(self.exp[self.order - 1 - self.log[a]])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def alpha_pow(self, i: int) -> int:
        return int(self.exp[i % (self.order - 1)])

    def mul_vec(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise product of broadcastable uint arrays."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        nz = (a != 0) & (b != 0)
        if np.any(nz):
            out[nz] = self.exp[self.log[np.broadcast_to(a, out.shape)[nz]]
                               + self.log[np.broadcast_to(b, out.shape)[nz]]]
        return out


# polynomial helpers: coefficient arrays in ascending degree, python ints

def _trim(p: list[int]) -> list[int]:
    d = len(p) - 1
    while d > 0 and p[d] == 0:
        d -= 1
    return p[:d + 1]


def _poly_add(a: list[int], b: list[int]) -> list[int]:
    if len(a) < len(b):
        a, b = b, a
    out = a[:]
    for i, c in enumerate(b):
        out[i] ^= c
    return _trim(out)


def _poly_mul(gf: GaloisField, a: list[int], b: list[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    out[i + j] ^= gf.mul(ai, bj)
    return _trim(out)


def _poly_divmod(gf: GaloisField, a: list[int], b: list[int]) -> tuple[list[int], list[int]]:
    a = a[:]
    db, da = len(b) - 1, len(a) - 1
    if da < db:
        return [0], _trim(a)
    inv_lead = gf.inv(b[db])
    quot = [0] * (da - db + 1)
    for shift in range(da - db, -1, -1):
        coef = gf.mul(a[db + shift], inv_lead)
        quot[shift] = coef
        if coef:
            for j in range(db + 1):
                a[j + shift] ^= gf.mul(coef, b[j])
    return _trim(quot), _trim(a)


def _poly_eval(gf: GaloisField, p: list[int], x: int) -> int:
    acc = 0
    for c in reversed(p):
        acc = gf.mul(acc, x) ^ c
    return acc


def _poly_deg(p: list[int]) -> int:
    return len(_trim(p)) - 1 if any(p) else -1


class RsCode:
    """Reed-Solomon code parameters plus encode/decode state.

    ``length`` may be any value in (dimension, 2^w - 1]; shorter codes are
    parity-truncated from the mother code (see module docstring). Instances
    are immutable and safe to share across threads.
    """

    def __init__(self, field_bits: int, length: int, dimension: int,
                 primitive_poly: int | None = None):
        self.gf = GaloisField(field_bits, primitive_poly)
        n = self.gf.order - 1
        if not 1 <= dimension < length <= n:
            raise ValueError(f"need 1 <= D < L <= {n}, got L={length} D={dimension}")
        self.field_bits = field_bits
        self.length = length
        self.dimension = dimension
        self.mother_length = n
        self.num_parity = n - dimension          # mother-code parity count
        self.num_erasures = n - length           # truncated parity positions
        self.d_min = length - dimension + 1
        self.t = (self.d_min - 1) // 2
        # narrow-sense generator, roots alpha^1 .. alpha^(n-D), ascending degree
        g = [1]
        for j in range(1, self.num_parity + 1):
            g = _poly_mul(self.gf, g, [self.gf.alpha_pow(j), 1])
        self.generator = g
        # descending-degree tail for synthetic division (monic lead dropped)
        self._gen_tail = np.array(g[-2::-1], dtype=np.int64)
        # erasure locator for the truncated positions is fixed per code
        self._erasure_locator = [1]
        for pos in range(length, n):
            x_loc = self.gf.alpha_pow(n - 1 - pos)
            self._erasure_locator = _poly_mul(self.gf, self._erasure_locator, [1, x_loc])

    def __repr__(self):
        return (f"RsCode(GF(2^{self.field_bits}), L={self.length}, D={self.dimension}, "
                f"t={self.t})")


@dataclass(frozen=True)
class DecodeResult:
    """``failed`` marks a detected decoding failure; ``message`` is then the
    systematic part of the received word (callers count the frame as errored
    either way)."""

    message: np.ndarray
    corrected: int
    failed: bool


def rs_encode(code: RsCode, message) -> np.ndarray:
    """Systematically encode D field elements into L (message first)."""
    msg = np.asarray(message, dtype=np.int64)
    if msg.shape != (code.dimension,):
        raise ValueError(f"message must have {code.dimension} symbols")
    if np.any(msg < 0) or np.any(msg >= code.gf.order):
        raise ValueError(f"symbols must lie in [0, {code.gf.order})")
    return rs_encode_batch(code, msg[None, :])[0]


def rs_encode_batch(code: RsCode, messages: np.ndarray) -> np.ndarray:
    """Encode a (batch, D) array of messages to (batch, L) codewords."""
    gf = code.gf
    msgs = np.asarray(messages, dtype=np.int64)
    batch = msgs.shape[0]
    # synthetic division of m(x) x^{2t0} by the monic generator, batched
    work = np.zeros((batch, code.dimension + code.num_parity), dtype=np.int64)
    work[:, :code.dimension] = msgs
    tail_cols = np.flatnonzero(code._gen_tail)
    log_tail = gf.log[code._gen_tail[tail_cols]]
    for i in range(code.dimension):
        rows = np.flatnonzero(work[:, i])
        if rows.size:
            prod = gf.exp[gf.log[work[rows, i]][:, None] + log_tail[None, :]]
            work[np.ix_(rows, i + 1 + tail_cols)] ^= prod
    parity = work[:, code.dimension:]
    return np.concatenate([msgs, parity[:, :code.length - code.dimension]], axis=1)


def _syndromes(code: RsCode, word: list[int]) -> list[int]:
    gf = code.gf
    out = []
    for j in range(1, code.num_parity + 1):
        a = gf.alpha_pow(j)
        acc = 0
        for c in word:  # descending-degree Horner over mother positions
            acc = gf.mul(acc, a) ^ c
        out.append(acc)
    return out


def rs_decode(code: RsCode, received) -> DecodeResult:
    """Bounded-distance errors-and-erasures decoding of one length-L word."""
    word = np.asarray(received, dtype=np.int64)
    if word.shape != (code.length,):
        raise ValueError(f"received word must have {code.length} symbols")
    if np.any(word < 0) or np.any(word >= code.gf.order):
        raise ValueError(f"symbols must lie in [0, {code.gf.order})")
    gf = code.gf
    n = code.mother_length
    mother = [0] * n
    for i in range(code.length):
        mother[i] = int(word[i])

    synd = _syndromes(code, mother)
    if not any(synd):
        # the zero-padded word already is a codeword
        return DecodeResult(word[:code.dimension].copy(), 0, False)

    two_t0 = code.num_parity
    e = code.num_erasures
    s_poly = synd  # ascending: S_{j+1} is the coefficient of x^j
    xi = _trim(_poly_mul(gf, s_poly, code._erasure_locator)[:two_t0])

    # Sugiyama: run Euclid on (x^{2t0}, Xi) until deg < ceil((2t0 + e) / 2)
    stop_deg = (two_t0 + e + 1) // 2
    a = [0] * two_t0 + [1]
    b = xi
    u_a, u_b = [0], [1]
    while _poly_deg(b) >= stop_deg:
        q, r = _poly_divmod(gf, a, b)
        a, b = b, r
        u_a, u_b = u_b, _poly_add(u_a, _poly_mul(gf, q, u_b))
    lam = u_b
    if lam[0] == 0:
        return DecodeResult(word[:code.dimension].copy(), 0, True)
    inv0 = gf.inv(lam[0])
    lam = [gf.mul(c, inv0) for c in lam]
    omega = [gf.mul(c, inv0) for c in b]
    nu = _poly_deg(lam)
    if nu > (two_t0 - e) // 2:
        return DecodeResult(word[:code.dimension].copy(), 0, True)

    # Chien search for error positions among the non-truncated coordinates
    error_pos = []
    for pos in range(code.length):
        x_inv = gf.inv(gf.alpha_pow(n - 1 - pos))
        if _poly_eval(gf, lam, x_inv) == 0:
            error_pos.append(pos)
    if len(error_pos) != nu:
        return DecodeResult(word[:code.dimension].copy(), 0, True)

    # Forney magnitudes from Omega / Psi' at the inverse locators
    psi = _poly_mul(gf, lam, code._erasure_locator)
    psi_deriv = [psi[d] if d % 2 == 1 else 0 for d in range(1, len(psi))]
    corrected = mother[:]
    for pos in error_pos + list(range(code.length, n)):
        x_inv = gf.inv(gf.alpha_pow(n - 1 - pos))
        denom = _poly_eval(gf, psi_deriv, x_inv)
        if denom == 0:
            return DecodeResult(word[:code.dimension].copy(), 0, True)
        magnitude = gf.div(_poly_eval(gf, omega, x_inv), denom)
        corrected[pos] ^= magnitude

    if any(_syndromes(code, corrected)):
        return DecodeResult(word[:code.dimension].copy(), 0, True)
    return DecodeResult(np.array(corrected[:code.dimension], dtype=np.int64),
                        len(error_pos), False)


@dataclass(frozen=True)
class SymbolMapping:
    """How R-bit channel symbols carry R/w code symbols for an N x R_n link."""

    field_bits: int
    num_units: int
    bits_per_unit: int

    def __post_init__(self):
        if self.bits_per_use % self.field_bits:
            raise ValueError("field_bits must divide the bits per channel use")
        if self.bits_per_use > 62:
            raise ValueError("bits per channel use above 62 not supported")

    @property
    def bits_per_use(self) -> int:
        return self.num_units * self.bits_per_unit

    @property
    def symbols_per_use(self) -> int:
        return self.bits_per_use // self.field_bits


def codeword_to_messages(codeword, mapping: SymbolMapping) -> np.ndarray:
    """Pack code symbols into channel messages, one row per channel use.

    Big-endian on both levels: the first code symbol of a group takes the
    most significant bits and unit 0 takes the most significant message bits.
    """
    cw = np.asarray(codeword, dtype=np.int64)
    g = mapping.symbols_per_use
    if cw.shape[-1] % g:
        raise ValueError(f"codeword length must be a multiple of {g}")
    cw2 = cw.reshape(*cw.shape[:-1], cw.shape[-1] // g, g)
    value = np.zeros(cw2.shape[:-1], dtype=np.int64)
    for k in range(g):
        value = (value << mapping.field_bits) | cw2[..., k]
    rn = mapping.bits_per_unit
    mask = (1 << rn) - 1
    units = [(value >> (rn * (mapping.num_units - 1 - n))) & mask
             for n in range(mapping.num_units)]
    return np.stack(units, axis=-1)


def messages_to_codeword(messages, mapping: SymbolMapping) -> np.ndarray:
    """Inverse of :func:`codeword_to_messages`."""
    msgs = np.asarray(messages, dtype=np.int64)
    rn = mapping.bits_per_unit
    value = np.zeros(msgs.shape[:-1], dtype=np.int64)
    for n in range(mapping.num_units):
        value = (value << rn) | msgs[..., n]
    w = mapping.field_bits
    mask = (1 << w) - 1
    g = mapping.symbols_per_use
    syms = [(value >> (w * (g - 1 - k))) & mask for k in range(g)]
    out = np.stack(syms, axis=-1)
    return out.reshape(*msgs.shape[:-2], -1) if msgs.ndim > 1 else out.reshape(-1)
