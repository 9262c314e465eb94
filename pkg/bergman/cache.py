"""
On-disk Gram matrix cache.

Entries are keyed by (domain hash, degree, precision, rule digest) and stored
in the binary Gram format; a file whose digest does not verify is a miss.
Eviction is manual (``manage.py clear_gram_cache``).
"""

import hashlib
import logging
from pathlib import Path
from typing import Callable, Optional

from .conf import get_setting
from .errors import ValidationError
from .gram import GramMatrix, gram_from_bytes, write_gram_binary

logger = logging.getLogger(__name__)


class GramCache:
    """Directory of ``gram-<key>.bin`` files."""

    SUFFIX = '.bin'

    def __init__(self, directory=None):
        self.directory = Path(directory or get_setting('CACHE_DIR'))

    @staticmethod
    def generate_cache_key(domain_hash: str, degree: int, precision_bits: int,
                           rule_digest: str) -> str:
        key_data = f"{domain_hash}|{degree}|{precision_bits}|{rule_digest}"
        return hashlib.sha256(key_data.encode()).hexdigest()

    def path_for(self, key: str) -> Path:
        return self.directory / f"gram-{key}{self.SUFFIX}"

    def lookup(self, domain_hash: str, degree: int, precision_bits: int,
               rule_digest: str) -> Optional[GramMatrix]:
        """Return the stored matrix or None; corrupt or mismatched files are misses."""
        key = self.generate_cache_key(domain_hash, degree, precision_bits, rule_digest)
        path = self.path_for(key)
        if not path.exists():
            logger.info(f"Cache miss for {domain_hash[:12]} degree {degree} at {precision_bits} bits")
            return None
        try:
            gram = gram_from_bytes(path.read_bytes())
        except (ValidationError, ValueError, KeyError) as e:
            logger.warning(f"Discarding cache entry {path.name}: {e}")
            return None
        stored = (gram.domain_hash, gram.degree, gram.precision_bits, gram.rule_digest)
        if stored != (domain_hash, degree, precision_bits, rule_digest):
            logger.warning(f"Cache entry {path.name} does not match its key; ignoring it")
            return None
        logger.info(f"Cache hit for {domain_hash[:12]} degree {degree} at {precision_bits} bits")
        return gram

    def store(self, gram: GramMatrix) -> Path:
        key = self.generate_cache_key(gram.domain_hash, gram.degree, gram.precision_bits,
                                      gram.rule_digest)
        path = self.path_for(key)
        write_gram_binary(gram, path)
        logger.info(f"Cached Gram matrix as {path.name}")
        return path

    def get_or_compute(self, domain_hash: str, degree: int, precision_bits: int,
                       rule_digest: str, compute: Callable[[], GramMatrix]) -> GramMatrix:
        gram = self.lookup(domain_hash, degree, precision_bits, rule_digest)
        if gram is None:
            gram = compute()
            self.store(gram)
        return gram

    def clear(self) -> int:
        """Delete every cache file; returns the number removed."""
        if not self.directory.exists():
            return 0
        removed = 0
        for path in self.directory.glob(f"gram-*{self.SUFFIX}"):
            path.unlink()
            removed += 1
        logger.info(f"Removed {removed} cached Gram matrices from {self.directory}")
        return removed


def cache_lookup(domain_hash: str, degree: int, precision_bits: int, rule_digest: str,
                 directory=None) -> Optional[GramMatrix]:
    return GramCache(directory).lookup(domain_hash, degree, precision_bits, rule_digest)
