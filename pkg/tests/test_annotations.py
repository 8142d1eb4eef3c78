import numpy as np
import pytest

from tablesynth.annotations import (LAYER_BOTTOM, LAYER_INTERMEDIATE,
                                    LAYER_TOP, annotate_view, build_oodag,
                                    classify_layers, generate_ooam,
                                    grasp_order, mask_bbox)
from tests.conftest import make_cube_scene, overhead_view


def masks_from_rows(*rows):
    """Tiny 1-row masks built from 0/1 strings for OOAM tests."""
    return [np.array([[c == "1" for c in row]]) for row in rows]


class TestGenerateOoam:
    def test_disjoint_objects_zero_matrix(self):
        vis = masks_from_rows("1100", "0011")
        occ = masks_from_rows("0000", "0000")
        np.testing.assert_array_equal(generate_ooam(vis, occ), np.zeros((2, 2)))

    def test_diagonal_always_zero(self):
        full = masks_from_rows("1111", "1111")
        ooam = generate_ooam(full, full)
        assert np.all(np.diag(ooam) == 0)

    def test_three_object_chain(self):
        # A's visible part covers B's occluded part; B's covers C's;
        # A and C never touch.
        vis = masks_from_rows("11000000", "00110000", "00001100")
        occ = masks_from_rows("00000000", "01000000", "00010000")
        ooam = generate_ooam(vis, occ)
        expected = np.zeros((3, 3), dtype=np.uint8)
        expected[0, 1] = 1
        expected[1, 2] = 1
        np.testing.assert_array_equal(ooam, expected)

    def test_brute_force_oracle_on_random_masks(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            m = rng.integers(1, 5)
            vis = [rng.random((6, 6)) < 0.3 for _ in range(m)]
            occ = [rng.random((6, 6)) < 0.3 for _ in range(m)]
            ooam = generate_ooam(vis, occ)
            for i in range(m):
                for j in range(m):
                    expected = 0
                    if i != j:
                        inter = sum(
                            1 for y in range(6) for x in range(6)
                            if vis[i][y, x] and occ[j][y, x])
                        expected = 1 if inter > 0 else 0
                    assert ooam[i, j] == expected

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            generate_ooam(masks_from_rows("10"), [])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            generate_ooam(masks_from_rows("10", "01"),
                          [np.zeros((2, 3), bool), np.zeros((1, 2), bool)])


class TestOodag:
    def test_zero_matrix(self):
        dag = build_oodag(np.zeros((3, 3), dtype=int))
        assert dag.edges == []
        assert not dag.is_cyclic
        assert all(layer == LAYER_TOP for layer in dag.layers.values())

    def test_two_cycle(self):
        ooam = np.array([[0, 1], [1, 0]])
        dag = build_oodag(ooam)
        assert dag.is_cyclic
        assert dag.layers == {0: LAYER_INTERMEDIATE, 1: LAYER_INTERMEDIATE}

    def test_chain(self):
        ooam = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]])
        dag = build_oodag(ooam)
        assert not dag.is_cyclic
        assert dag.edges == [(0, 1), (1, 2)]
        assert grasp_order(dag) == [0, 1, 2]

    def test_chain_layers(self):
        dag = build_oodag(np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]]))
        assert dag.layers == {0: LAYER_TOP, 1: LAYER_INTERMEDIATE,
                              2: LAYER_BOTTOM}

    def test_isolated_node_is_top(self):
        dag = build_oodag(np.zeros((1, 1), dtype=int))
        assert dag.layers == {0: LAYER_TOP}

    def test_longer_cycle_detected(self):
        ooam = np.zeros((4, 4), dtype=int)
        ooam[0, 1] = ooam[1, 2] = ooam[2, 0] = 1
        assert build_oodag(ooam).is_cyclic

    def test_grasp_order_tie_break(self):
        dag = build_oodag(np.zeros((3, 3), dtype=int), node_ids=[2, 0, 1])
        assert grasp_order(dag) == [0, 1, 2]

    def test_grasp_order_cyclic_returns_none(self):
        dag = build_oodag(np.array([[0, 1], [1, 0]]))
        assert grasp_order(dag) is None

    def test_custom_node_ids(self):
        ooam = np.array([[0, 1], [0, 0]])
        dag = build_oodag(ooam, node_ids=[7, 9])
        assert dag.edges == [(7, 9)]
        assert dag.layers == {7: LAYER_TOP, 9: LAYER_BOTTOM}


def test_mask_bbox():
    mask = np.zeros((5, 6), dtype=bool)
    assert mask_bbox(mask) == (0, 0, 0, 0)
    mask[2, 3] = mask[4, 5] = True
    assert mask_bbox(mask) == (3, 2, 3, 3)


class TestAnnotateView:
    def test_single_unoccluded_object(self, table):
        scene, meshes = make_cube_scene(table, [("c", 0.1, (0, 0, 0.8))])
        annotations, ooam = annotate_view(scene, overhead_view(table), meshes)
        assert len(annotations) == 1
        a = annotations[0]
        assert a.occlusion_rate == 0.0
        assert not a.occlusion.any()
        np.testing.assert_array_equal(a.visible, a.amodal)
        assert ooam.shape == (1, 1) and ooam[0, 0] == 0

    def test_fully_hidden_object_excluded(self, table):
        h = table.height
        scene, meshes = make_cube_scene(table, [
            ("small", 0.06, (0, 0, h + 0.03)),
            ("big", 0.2, (0, 0, h + 0.16)),  # big cube fully covers small
        ])
        annotations, ooam = annotate_view(scene, overhead_view(table), meshes)
        assert [a.instance_id for a in annotations] == [1]
        assert ooam.shape == (1, 1)

    def test_mask_algebra_and_rate(self, table):
        h = table.height
        scene, meshes = make_cube_scene(table, [
            ("a", 0.12, (0.0, 0.0, h + 0.06)),
            ("b", 0.12, (0.06, 0.0, h + 0.18)),  # partially covers a
        ])
        annotations, ooam = annotate_view(scene, overhead_view(table), meshes)
        assert len(annotations) == 2
        for a in annotations:
            np.testing.assert_array_equal(a.occlusion, a.amodal & ~a.visible)
            assert not (a.visible & a.occlusion).any()
            assert a.occlusion_rate == a.occlusion.sum() / a.amodal.sum()
            assert a.occlusion_rate < 1
        lower, upper = annotations
        assert lower.occlusion_rate > 0
        assert upper.occlusion_rate == 0
        # Upper cube occludes lower: OOAM entry (1, 0) only.
        np.testing.assert_array_equal(ooam, [[0, 0], [1, 0]])

    def test_visible_masks_disjoint(self, table):
        h = table.height
        scene, meshes = make_cube_scene(table, [
            ("a", 0.1, (0.0, 0.0, h + 0.05)),
            ("b", 0.1, (0.04, 0.0, h + 0.15)),
            ("c", 0.1, (-0.04, 0.03, h + 0.25)),
        ])
        annotations, _ = annotate_view(scene, overhead_view(table), meshes)
        total = np.zeros_like(annotations[0].visible, dtype=int)
        for a in annotations:
            total += a.visible
        assert total.max() <= 1

    def test_empty_scene(self, table):
        scene, meshes = make_cube_scene(table, [])
        annotations, ooam = annotate_view(scene, overhead_view(table), meshes)
        assert annotations == []
        assert ooam.shape == (0, 0)

    def test_bbox_matches_visible_mask(self, table):
        scene, meshes = make_cube_scene(table, [("c", 0.1, (0, 0, 0.8))])
        annotations, _ = annotate_view(scene, overhead_view(table), meshes)
        a = annotations[0]
        assert a.bbox == mask_bbox(a.visible)
