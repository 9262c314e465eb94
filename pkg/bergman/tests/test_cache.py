import tempfile
from pathlib import Path
from unittest import mock

from django.test import SimpleTestCase

from bergman.cache import GramCache, cache_lookup
from bergman.geometry import disk
from bergman.gram import compute_gram
from bergman.quadrature import build_rule


class GramCacheTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.domain = disk()
        cls.gram = compute_gram(cls.domain, build_rule(cls.domain), 5, 53)

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.cache = GramCache(self.tmp.name)
        self.key = (self.gram.domain_hash, 5, 53, self.gram.rule_digest)

    def tearDown(self):
        self.tmp.cleanup()

    def test_cache_key_generation(self):
        key1 = GramCache.generate_cache_key(*self.key)
        key2 = GramCache.generate_cache_key(*self.key)
        key3 = GramCache.generate_cache_key(self.gram.domain_hash, 6, 53, self.gram.rule_digest)
        self.assertEqual(key1, key2)
        self.assertNotEqual(key1, key3)

    def test_miss_then_hit(self):
        with self.assertLogs('bergman.cache', level='INFO') as logs:
            self.assertIsNone(self.cache.lookup(*self.key))
            self.cache.store(self.gram)
            hit = self.cache.lookup(*self.key)
        self.assertTrue(any('Cache miss' in line for line in logs.output))
        self.assertTrue(any('Cache hit' in line for line in logs.output))
        self.assertEqual(hit.degree, 5)
        self.assertIsNotNone(cache_lookup(*self.key, directory=self.tmp.name))

    def test_corrupt_entry_is_a_miss(self):
        path = self.cache.store(self.gram)
        data = bytearray(path.read_bytes())
        data[-1] ^= 0xFF
        path.write_bytes(bytes(data))
        with self.assertLogs('bergman.cache', level='WARNING'):
            self.assertIsNone(self.cache.lookup(*self.key))

    def test_get_or_compute_computes_once(self):
        compute = mock.Mock(return_value=self.gram)
        self.cache.get_or_compute(*self.key, compute)
        self.cache.get_or_compute(*self.key, compute)
        self.assertEqual(compute.call_count, 1)

    def test_clear(self):
        self.cache.store(self.gram)
        self.assertEqual(self.cache.clear(), 1)
        self.assertEqual(list(Path(self.tmp.name).glob('gram-*')), [])
        self.assertEqual(GramCache(Path(self.tmp.name) / 'missing').clear(), 0)
