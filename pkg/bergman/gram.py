"""
Gram matrix of complex area moments M[m][n] = integral over G of z**m conj(z)**n.

Moments come from the boundary rule through the complex Green identity

    M[m][n] = 1/(2i(n+1)) * contour integral of z**m conj(z)**(n+1) dz.

Entries for m >= n are computed (one fixed-order dot product per entry at
working precision); the upper triangle is the conjugate and the diagonal is
real, so the stored matrix is exactly Hermitian.
"""

import hashlib
import json
import logging
import os
import struct
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import mpmath
import numpy as np
import pandas as pd

from .conf import get_setting
from .errors import ValidationError
from .geometry import DomainSpec
from .linalg import cholesky
from .performance import performance_monitor
from .precision import (check_precision, from_limbs, is_double, leading, limb_count,
                        split_real, to_limbs, working_precision)
from .quadrature import QuadratureRule, rule_digest

logger = logging.getLogger(__name__)

MAGIC = b'BGRM'
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """
    Hermitian (N+1)x(N+1) moment matrix stored as float64 limbs.

    ``limbs`` has shape (N+1, N+1, 2, k), k = limb_count(precision_bits).
    """
    limbs: np.ndarray
    degree: int
    precision_bits: int
    domain_hash: str
    rule_digest: str = ""

    @property
    def entries(self) -> np.ndarray:
        """Nearest complex128 matrix."""
        return leading(self.limbs)

    def mp_entries(self):
        """Row lists of mpc at storage precision (complex128 array at 53 bits)."""
        with working_precision(self.precision_bits):
            return from_limbs(self.limbs)

    def working(self):
        """Entries in the form the linear algebra of this precision expects."""
        if is_double(self.precision_bits):
            return self.entries
        return self.mp_entries()

    def truncate(self, degree: int) -> "GramMatrix":
        if not 0 <= degree <= self.degree:
            raise ValidationError(f"cannot truncate degree {self.degree} Gram to {degree}")
        return GramMatrix(self.limbs[:degree + 1, :degree + 1].copy(), degree,
                          self.precision_bits, self.domain_hash, self.rule_digest)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def _row_limbs(m: int, nodes: Sequence, weights: Sequence, bits: int) -> np.ndarray:
    """Entries M[m][0..m] at ``bits`` bits, returned as limbs."""
    k = limb_count(bits)
    out = np.zeros((m + 1, 2, k))
    with working_precision(bits):
        zm = [z ** m for z in nodes]
        q = [mpmath.conj(z) * w for z, w in zip(nodes, weights)]
        for n in range(m + 1):
            value = mpmath.fdot(zm, q) / (2j * (n + 1))
            if n == m:
                value = mpmath.mpc(mpmath.re(value), 0)
            out[n, 0, :] = split_real(value.real, k)
            out[n, 1, :] = split_real(value.imag, k)
            if n < m:
                q = [qj * mpmath.conj(z) for qj, z in zip(q, nodes)]
    return out


_pool_state = {}


def _init_pool(nodes, weights, bits):
    _pool_state.update(nodes=nodes, weights=weights, bits=bits)


def _pool_row(m: int) -> np.ndarray:
    return _row_limbs(m, _pool_state['nodes'], _pool_state['weights'], _pool_state['bits'])


def _assemble_double(rule: QuadratureRule, degree: int) -> np.ndarray:
    z = rule.nodes
    powers = np.vander(z, degree + 1, increasing=True)
    conj_powers = np.vander(np.conj(z), degree + 2, increasing=True)[:, 1:]
    moments = powers.T @ (conj_powers * rule.weights[:, None])
    moments /= 2j * np.arange(1, degree + 2)[None, :]
    return 0.5 * (moments + moments.conj().T)


def _assemble_mp(rule: QuadratureRule, degree: int, bits: int, workers: int) -> np.ndarray:
    k = limb_count(bits)
    limbs = np.zeros((degree + 1, degree + 1, 2, k))
    rows = range(degree + 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_pool,
                                 initargs=(rule.mp_nodes, rule.mp_weights, bits)) as pool:
            results = list(pool.map(_pool_row, rows))
    else:
        results = [_row_limbs(m, rule.mp_nodes, rule.mp_weights, bits) for m in rows]
    for m, row in enumerate(results):
        limbs[m, :m + 1] = row
        limbs[:m, m, 0, :] = row[:m, 0, :]
        limbs[:m, m, 1, :] = -row[:m, 1, :]
    return limbs


def check_positive_definite(gram: GramMatrix) -> None:
    """Raise CholeskyBreakdown (with the pivot) unless the form is positive definite."""
    A = gram.working()
    if is_double(gram.precision_bits):
        cholesky(np.conj(A), gram.precision_bits)
    else:
        cholesky([[mpmath.conj(x) for x in row] for row in A], gram.precision_bits)


@performance_monitor.time_function('compute_gram')
def compute_gram(domain: DomainSpec, rule: QuadratureRule, degree: int,
                 precision_bits: Optional[int] = None, workers: Optional[int] = None) -> GramMatrix:
    """
    Moment matrix to ``degree`` at ``precision_bits`` working precision.

    Raises CholeskyBreakdown when the result is not positive definite.
    """
    if degree < 0:
        raise ValidationError(f"degree must be non-negative, got {degree}")
    bits = check_precision(precision_bits or get_setting('DEFAULT_PRECISION'))
    if [a.to_config() for a in rule.arcs] != [a.to_config() for a in domain.arcs]:
        raise ValidationError("quadrature rule was built for a different domain")
    workers = workers or get_setting('GRAM_WORKERS')
    rule = rule.at_precision(bits)

    if is_double(bits):
        limbs = to_limbs(_assemble_double(rule, degree), bits)
    else:
        limbs = _assemble_mp(rule, degree, bits, workers)

    gram = GramMatrix(limbs, degree, bits, domain.id_hash, rule_digest(rule))
    check_positive_definite(gram)
    logger.info(f"Gram {domain.short_hash} degree {degree} at {bits} bits "
                f"from {rule.size} nodes; M00 = {gram.entries[0, 0].real:.15g}")
    return gram


def _to_mp(value):
    if isinstance(value, (mpmath.mpc, mpmath.mpf)):
        return value
    return mpmath.mpc(complex(value))


def inner_product(gram: GramMatrix, p: Sequence, q: Sequence) -> complex:
    """<p, q> = sum_jk p_j conj(q_k) M[j][k] for monomial coefficient vectors."""
    if len(p) > gram.degree + 1 or len(q) > gram.degree + 1:
        raise ValidationError(
            f"coefficient vectors of length {len(p)}, {len(q)} exceed Gram degree {gram.degree}")
    if is_double(gram.precision_bits):
        M = gram.entries[:len(p), :len(q)]
        return complex(np.asarray(p, dtype=complex) @ M @ np.conj(np.asarray(q, dtype=complex)))
    M = gram.mp_entries()
    with working_precision(gram.precision_bits):
        p = [_to_mp(v) for v in p]
        q = [_to_mp(v) for v in q]
        total = mpmath.fsum(mpmath.fdot([p[j] * mpmath.conj(q[k]) for k in range(len(q))],
                                        M[j][:len(q)]) for j in range(len(p)))
    return complex(total)


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def _header(gram: GramMatrix) -> bytes:
    return json.dumps({
        'format': FORMAT_VERSION,
        'domain_hash': gram.domain_hash,
        'degree': gram.degree,
        'precision_bits': gram.precision_bits,
        'rule_digest': gram.rule_digest,
        'limbs': gram.limbs.shape[-1],
    }, sort_keys=True).encode()


def gram_to_bytes(gram: GramMatrix) -> bytes:
    header = _header(gram)
    body = MAGIC + struct.pack('<I', len(header)) + header + \
        np.ascontiguousarray(gram.limbs, dtype='<f8').tobytes()
    return body + hashlib.sha256(body).digest()


def gram_from_bytes(data: bytes) -> GramMatrix:
    if len(data) < 40 or data[:4] != MAGIC:
        raise ValidationError("not a Gram matrix file")
    body, trailer = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != trailer:
        raise ValidationError("Gram matrix file digest mismatch")
    (size,) = struct.unpack('<I', body[4:8])
    header = json.loads(body[8:8 + size])
    if header.get('format') != FORMAT_VERSION:
        raise ValidationError(f"unsupported Gram file format {header.get('format')}")
    n = header['degree'] + 1
    shape = (n, n, 2, header['limbs'])
    payload = body[8 + size:]
    if len(payload) != 8 * int(np.prod(shape)):
        raise ValidationError("Gram matrix file has the wrong payload size")
    limbs = np.frombuffer(payload, dtype='<f8').reshape(shape).astype(float)
    return GramMatrix(limbs, header['degree'], header['precision_bits'],
                      header['domain_hash'], header.get('rule_digest', ''))


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb') as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_gram_binary(gram: GramMatrix, path) -> None:
    atomic_write_bytes(path, gram_to_bytes(gram))


def read_gram_binary(path) -> GramMatrix:
    return gram_from_bytes(Path(path).read_bytes())


def write_gram_csv(gram: GramMatrix, path) -> None:
    """Row-major entries (nearest doubles) below a commented header line."""
    n = gram.degree + 1
    m_idx, n_idx = np.divmod(np.arange(n * n), n)
    values = gram.entries.ravel()
    frame = pd.DataFrame({'m': m_idx, 'n': n_idx, 're': values.real, 'im': values.imag})
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(f"# domain_hash={gram.domain_hash},degree={gram.degree},"
                     f"precision_bits={gram.precision_bits}\n")
        frame.to_csv(handle, index=False, float_format='%.17g')
