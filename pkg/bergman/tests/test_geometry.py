import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from bergman.errors import BoundaryProximityError, ValidationError
from bergman.geometry import (ArcSpec, area, boundary_point, boundary_sample, build_domain,
                              contains, corner_angle, diameter, disk, ellipse, lens,
                              load_domain, lune, psi_image, spiked_lens, square,
                              winding_number)


class GalleryTests(SimpleTestCase):
    def test_disk_hash_is_stable(self):
        self.assertEqual(disk().id_hash, disk().id_hash)
        self.assertEqual(len(disk().id_hash), 64)
        self.assertNotEqual(disk().id_hash, disk(2.0).id_hash)

    def test_areas(self):
        self.assertAlmostEqual(area(disk()), math.pi, places=12)
        self.assertAlmostEqual(area(ellipse(1.0, 0.5)), math.pi / 2, places=12)
        self.assertAlmostEqual(area(square(1.0)), 4.0, places=12)

    def test_lune_area(self):
        self.assertAlmostEqual(area(lune()), 0.75 * math.pi, places=8)

    def test_lune_rejects_base_point_in_excluded_disk(self):
        with self.assertRaises(ValidationError):
            lune(z0=0.7)

    def test_lens_corner_angle(self):
        domain = lens(0.6, 1 / math.sqrt(2))
        measured = corner_angle(domain, 0.6)
        self.assertAlmostEqual(measured, math.pi / math.sqrt(2), delta=1e-6)

    def test_lens_rejects_bad_angle(self):
        with self.assertRaises(ValidationError):
            lens(0.6, 1.2)

    def test_spiked_lens_contains_segment(self):
        domain = spiked_lens(tips=[0.8], attach=[0.1])
        self.assertTrue(contains(domain, [0.65, 0.72]).all())
        self.assertFalse(contains(domain, [0.85])[0])

    def test_psi_image_z0_is_psi_of_zero(self):
        domain = psi_image((0.1, 1, 0.25))
        self.assertEqual(domain.z0, 0.1)

    def test_diameter_of_disk(self):
        self.assertAlmostEqual(diameter(disk(), samples=4096), 2.0, places=5)


class QueryTests(SimpleTestCase):
    def setUp(self):
        self.disk = disk()

    def test_winding_number(self):
        self.assertEqual(winding_number(self.disk, 0.3 + 0.2j), 1)
        self.assertEqual(winding_number(self.disk, 1.5), 0)

    def test_winding_number_on_boundary(self):
        with self.assertRaises(BoundaryProximityError):
            winding_number(self.disk, 1.0)

    def test_contains_mask(self):
        mask = contains(self.disk, [0, 0.99, 1.01, 2j])
        self.assertEqual(mask.tolist(), [True, True, False, False])

    def test_boundary_point_range(self):
        z, _ = boundary_point(self.disk, 0, 0.25)
        self.assertAlmostEqual(z, 1j, places=14)
        with self.assertRaises(ValidationError):
            boundary_point(self.disk, 1, 0.5)

    def test_boundary_sample_on_circle(self):
        pts = boundary_sample(self.disk, 256)
        np.testing.assert_allclose(np.abs(pts), 1.0, atol=1e-14)

    def test_distance_to_circle(self):
        self.assertAlmostEqual(self.disk.arcs[0].distance(0.5), 0.5, places=14)

    def test_segment_conjugate(self):
        arc = ArcSpec("segment", {'start': 1j, 'end': 2 + 1j})
        mirrored = arc.conjugate()
        self.assertAlmostEqual(mirrored.point(0.25), arc.point(0.75).conjugate(), places=14)


class ConfigTests(SimpleTestCase):
    def test_gallery_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'disk.json'
            path.write_text(json.dumps({'gallery': 'disk', 'radius': 2.0, 'z0': [0.5, 0]}))
            domain = load_domain(path)
        self.assertEqual(domain.z0, 0.5)
        self.assertEqual(domain.gallery_params['radius'], 2.0)

    def test_gallery_toml_with_override(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'lens.cfg'
            path.write_text('gallery = "lens"\nxi = 0.6\n')
            domain = load_domain(path, z0=0.1)
        self.assertEqual(domain.gallery, 'lens')
        self.assertEqual(domain.z0, 0.1)

    def test_malformed_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'broken.json'
            path.write_text('{"gallery": ')
            with self.assertRaises(ValidationError):
                load_domain(path)

    def test_missing_config(self):
        with self.assertRaises(ValidationError):
            load_domain('/nonexistent/domain.cfg')

    def test_unknown_gallery(self):
        with self.assertRaises(ValidationError):
            build_domain({'gallery': 'pentagon'})

    def test_unknown_arc_kind(self):
        with self.assertRaises(ValidationError):
            build_domain({'arcs': [{'kind': 'spline'}], 'z0': 0})

    def test_malformed_entries_name_the_field(self):
        arcs = [{'kind': 'circle', 'center': [0, 0], 'radius': 1, 'start_turn': 0, 'sweep': 1}]
        cases = [
            ({'gallery': 'lens', 'xi': 'wide'}, 'lens'),
            ({'arcs': arcs, 'z0': [0, 0], 'corners': [{'vertex': [1, 0]}]}, "'alpha'"),
            ({'arcs': arcs, 'z0': [0, 0], 'cusps': [{'vertex': [1, 0], 'p': 2}]}, "'c1'"),
            ({'arcs': [{'kind': 'segment', 'start': [0, 0]}], 'z0': [0, 0]}, "'end'"),
        ]
        for config, fragment in cases:
            with self.subTest(fragment=fragment):
                with self.assertRaises(ValidationError) as ctx:
                    build_domain(config)
                self.assertIn(fragment, str(ctx.exception))

    def test_explicit_square(self):
        corners = [1 - 1j, 1 + 1j, -1 + 1j, -1 - 1j]
        arcs = [{'kind': 'segment', 'start': [corners[i].real, corners[i].imag],
                 'end': [corners[(i + 1) % 4].real, corners[(i + 1) % 4].imag]} for i in range(4)]
        domain = build_domain({'arcs': arcs, 'z0': [0, 0]})
        self.assertAlmostEqual(area(domain), 4.0, places=12)

    def test_open_boundary_rejected(self):
        arcs = [{'kind': 'segment', 'start': [0, 0], 'end': [1, 0]},
                {'kind': 'segment', 'start': [1, 0], 'end': [0, 1]}]
        with self.assertRaises(ValidationError):
            build_domain({'arcs': arcs + [{'kind': 'segment', 'start': [0, 1], 'end': [0, 0.5]}],
                          'z0': [0.2, 0.2]})

    def test_self_intersection_rejected(self):
        points = [0, 1 + 1j, 1, 1j]
        arcs = [{'kind': 'segment', 'start': [points[i].real, points[i].imag],
                 'end': [points[(i + 1) % 4].real, points[(i + 1) % 4].imag]} for i in range(4)]
        with self.assertRaises(ValidationError):
            build_domain({'arcs': arcs, 'z0': [0.5, 0.2]})
