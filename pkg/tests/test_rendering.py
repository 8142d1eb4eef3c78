import numpy as np
import pytest

from tablesynth.rendering import (BACKGROUND_ID, TABLE_ID, RenderError,
                                  camera_basis, kelvin_to_rgb, project_point,
                                  rasterize)
from tablesynth.sampling import LightSource, TableSpec
from tests.conftest import make_cube_scene, overhead_view


class TestProjectPoint:
    def test_optical_axis(self, table):
        view = overhead_view(table, distance=1.3)
        px, py, depth, valid = project_point([0, 0, table.height], view)
        assert valid
        assert px == pytest.approx(view.intrinsics.image_width / 2)
        assert py == pytest.approx(view.intrinsics.image_height / 2)
        assert depth == pytest.approx(1.3)

    def test_edge_of_frustum(self, table):
        # Lateral offset z * h_aperture / (2 * focal) lands on pixel x = W.
        view = overhead_view(table, width=640, height=480, distance=1.0)
        basis = camera_basis(view)
        z = 0.8
        off = z * 2.63 / (2 * 1.88)
        p = view.position + z * basis[2] + off * basis[0]
        px, _, depth, valid = project_point(p, view)
        assert valid
        assert px == pytest.approx(640.0, abs=1e-9)
        assert depth == pytest.approx(z)

    def test_apex_camera_sees_table_center(self, table):
        view = overhead_view(table)
        px, py, _, valid = project_point(table.top_center, view)
        assert valid
        assert (px, py) == (pytest.approx(80.0), pytest.approx(60.0))

    def test_behind_camera_flagged(self, table):
        view = overhead_view(table, distance=1.0)
        _, _, _, valid = project_point([0, 0, table.height + 2.0], view)
        assert not valid


class TestCameraBasis:
    def test_forward_toward_target(self, table):
        view = overhead_view(table, distance=2.0)
        basis = camera_basis(view)
        np.testing.assert_allclose(basis[2], [0, 0, -1], atol=1e-12)
        # Orthonormal, right-handed.
        np.testing.assert_allclose(basis @ basis.T, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(np.cross(basis[0], basis[1]), basis[2],
                                   atol=1e-12)

    def test_lookat_ray_passes_through_target(self, table):
        rng = np.random.default_rng(0)
        for _ in range(100):
            pos = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1),
                            table.height + rng.uniform(0.2, 1.5)])
            view = overhead_view(table)
            view = type(view)(pos, table.top_center, view.intrinsics)
            basis = camera_basis(view)
            to_target = table.top_center - pos
            dist = np.linalg.norm(to_target)
            miss = np.linalg.norm(pos + basis[2] * dist - table.top_center)
            assert miss < 1e-6


class TestKelvinToRgb:
    def test_6500_near_white(self):
        rgb = kelvin_to_rgb(6500)
        assert rgb.max() - rgb.min() < 0.15

    def test_2000_is_warm(self):
        rgb = kelvin_to_rgb(2000)
        assert rgb[0] > rgb[2]

    def test_clamp_low(self):
        np.testing.assert_array_equal(kelvin_to_rgb(500), kelvin_to_rgb(1000))

    def test_blue_red_ratio_monotone(self):
        temps = np.linspace(1500, 9000, 40)
        ratios = [kelvin_to_rgb(t)[2] / max(kelvin_to_rgb(t)[0], 1e-9)
                  for t in temps]
        assert all(b >= a - 1e-9 for a, b in zip(ratios, ratios[1:]))


class TestRasterize:
    def test_empty_ids_gives_table_and_background(self, table):
        scene, meshes = make_cube_scene(table, [("c", 0.1, (0, 0, 0.8))])
        out = rasterize(scene, overhead_view(table), [], meshes)
        assert set(np.unique(out.instance_map)) <= {BACKGROUND_ID, TABLE_ID}
        assert (out.instance_map == TABLE_ID).any()
        assert np.all(out.depth_map[out.instance_map == TABLE_ID] > 0)

    def test_cube_projects_to_analytic_rect(self, table):
        side = 0.1
        top = table.height + side
        scene, meshes = make_cube_scene(
            table, [("c", side, (0, 0, table.height + side / 2))])
        view = overhead_view(table, distance=1.0)
        out = rasterize(scene, view, [0], meshes)
        ys, xs = np.nonzero(out.instance_map == 0)
        corners = [(sx, sy, top) for sx in (-side / 2, side / 2)
                   for sy in (-side / 2, side / 2)]
        pix = np.array([project_point(c, view)[:2] for c in corners])
        # Compare covered pixel centers against the analytic rectangle.
        assert xs.min() + 0.5 == pytest.approx(pix[:, 0].min(), abs=1.0)
        assert xs.max() + 0.5 == pytest.approx(pix[:, 0].max(), abs=1.0)
        assert ys.min() + 0.5 == pytest.approx(pix[:, 1].min(), abs=1.0)
        assert ys.max() + 0.5 == pytest.approx(pix[:, 1].max(), abs=1.0)
        # Flat top face: constant depth over the cube pixels.
        depths = out.depth_map[ys, xs]
        np.testing.assert_allclose(depths, 1.0 - side, atol=1e-6)

    def test_nearer_cube_wins_overlap(self, table):
        h = table.height
        scene, meshes = make_cube_scene(table, [
            ("a", 0.1, (0, 0, h + 0.05)),
            ("b", 0.1, (0, 0, h + 0.15)),  # stacked on top, nearer to camera
        ])
        view = overhead_view(table, distance=1.0)
        out = rasterize(scene, view, [0, 1], meshes)
        iso_a = rasterize(scene, view, [0], meshes)
        overlap = (iso_a.instance_map == 0) & (out.instance_map != BACKGROUND_ID)
        assert overlap.any()
        assert np.all(out.instance_map[overlap] == 1)

    def test_amodal_superset_and_depth_consistency(self, table):
        h = table.height
        scene, meshes = make_cube_scene(table, [
            ("a", 0.12, (0.0, 0, h + 0.06)),
            ("b", 0.12, (0.03, 0.02, h + 0.18)),
        ])
        view = overhead_view(table, distance=1.0)
        full = rasterize(scene, view, [0, 1], meshes)
        for oid in (0, 1):
            iso = rasterize(scene, view, [oid], meshes)
            full_pixels = full.instance_map == oid
            iso_pixels = iso.instance_map == oid
            assert np.all(~full_pixels | iso_pixels)  # iso superset
            np.testing.assert_allclose(full.depth_map[full_pixels],
                                       iso.depth_map[full_pixels], atol=1e-6)

    def test_pure_function(self, table):
        scene, meshes = make_cube_scene(table, [("c", 0.1, (0, 0, 0.8))])
        view = overhead_view(table)
        view = view.with_lights([LightSource(np.array([0.5, 0.5, 2.0]),
                                             5000.0, 4000.0)])
        a = rasterize(scene, view, [0], meshes)
        b = rasterize(scene, view, [0], meshes)
        np.testing.assert_array_equal(a.instance_map, b.instance_map)
        np.testing.assert_array_equal(a.depth_map, b.depth_map)
        np.testing.assert_array_equal(a.color, b.color)

    def test_missing_mesh_errors(self, table):
        scene, meshes = make_cube_scene(table, [("c", 0.1, (0, 0, 0.8))])
        with pytest.raises(RenderError):
            rasterize(scene, overhead_view(table), [0], {})

    def test_lights_affect_color(self, table):
        scene, meshes = make_cube_scene(table, [("c", 0.1, (0, 0, 0.8))])
        dark_view = overhead_view(table)
        lit_view = dark_view.with_lights(
            [LightSource(np.array([0.0, 0.0, 2.0]), 15000.0, 5000.0)])
        dark = rasterize(scene, dark_view, [0], meshes)
        lit = rasterize(scene, lit_view, [0], meshes)
        mask = dark.instance_map == 0
        assert lit.color[mask].mean() > dark.color[mask].mean()
