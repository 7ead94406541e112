import itertools
import unittest

import numpy as np
import torch

from lfdfnet.data_generators.augmentation import (
    ALL_SYMMETRIES,
    IDENTITY,
    Symmetry,
    apply_symmetry,
    augment,
    compose,
)
from lfdfnet.data_generators.light_field import ColorSpace, LightField
from lfdfnet.data_generators.synthetic.renderer import render
from lfdfnet.data_generators.synthetic.scene_spec import LayerSpec, RegionSpec, SceneSpec, TextureSpec
from lfdfnet.exceptions import LightFieldShapeError


class AugmentationTest(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(3)
        self.lf = LightField(data=rng.random((3, 3, 6, 6, 1)))

    def test_flip_h_is_an_involution(self):
        twice = augment(augment(self.lf, flip_h=True), flip_h=True)
        np.testing.assert_array_equal(twice.data, self.lf.data)

    def test_four_quarter_turns_are_the_identity(self):
        lf = self.lf
        for _ in range(4):
            lf = augment(lf, rot90=1)
        np.testing.assert_array_equal(lf.data, self.lf.data)

    def test_flips_mirror_spatial_and_angular_axes_together(self):
        flipped = augment(self.lf, flip_h=True)
        np.testing.assert_array_equal(flipped.data, self.lf.data[:, ::-1, :, ::-1])
        flipped = augment(self.lf, flip_v=True)
        np.testing.assert_array_equal(flipped.data, self.lf.data[::-1, :, ::-1, :])

    def test_the_group_has_eight_distinct_elements(self):
        self.assertEqual(len(ALL_SYMMETRIES), 8)
        images = {apply_symmetry(self.lf.data, symmetry).tobytes() for symmetry in ALL_SYMMETRIES}
        self.assertEqual(len(images), 8)
        self.assertIn(IDENTITY, ALL_SYMMETRIES)
        self.assertTrue(Symmetry(True, True, 2).is_identity)

    def test_augmentation_is_a_group_action(self):
        for first, second in itertools.product(ALL_SYMMETRIES, repeat=2):
            with self.subTest(first=first, second=second):
                sequential = apply_symmetry(apply_symmetry(self.lf.data, first), second)
                composed = apply_symmetry(self.lf.data, compose(first, second))
                np.testing.assert_array_equal(sequential, composed)

    def test_inverse(self):
        for symmetry in ALL_SYMMETRIES + [Symmetry(False, True, 1), Symmetry(True, True, 3)]:
            with self.subTest(symmetry=symmetry):
                restored = apply_symmetry(apply_symmetry(self.lf.data, symmetry), symmetry.inverse())
                np.testing.assert_array_equal(restored, self.lf.data)

    def test_batched_tensors(self):
        batch = torch.rand(2, 3, 3, 4, 4)
        symmetry = Symmetry(True, False, 1)
        augmented = apply_symmetry(batch, symmetry, angular_axes=(1, 2), spatial_axes=(3, 4))
        for index in range(2):
            np.testing.assert_array_equal(
                augmented[index].numpy(), apply_symmetry(batch[index].numpy(), symmetry)
            )

    def test_rotation_needs_a_square_angular_array(self):
        lf = LightField(data=np.zeros((3, 5, 4, 4, 1)))
        for rotation in (1, 2, 3):
            with self.subTest(rot90=rotation), self.assertRaises(LightFieldShapeError):
                augment(lf, rot90=rotation)
        self.assertEqual(augment(lf, flip_h=True, flip_v=True).angular_shape, (3, 5))

    def test_flip_h_matches_the_mirrored_scene(self):
        # Integer disparities keep the bilinear sampling exact
        scene = SceneSpec(
            layers=(
                LayerSpec(texture=TextureSpec(kind="noise", seed=4, scale=2.0), depth=2.0),
                LayerSpec(
                    texture=TextureSpec(kind="checker", period=4, color=(1.0, 0.5, 0.25)),
                    depth=1.0,
                    region=RegionSpec(kind="rect", box=(0.2, 0.1, 0.4, 0.3)),
                ),
            ),
            angular_res=3,
            spatial_res=(32, 32),
            unit_disparity=2.0,
        )
        lf, _ = render(scene, 1)
        mirrored, _ = render(scene.mirrored(), 1)
        flipped = augment(lf, flip_h=True)
        self.assertEqual(flipped.color_space, ColorSpace.RGB)
        np.testing.assert_allclose(flipped.data, mirrored.data, atol=1e-6)


if __name__ == "__main__":
    unittest.main()
