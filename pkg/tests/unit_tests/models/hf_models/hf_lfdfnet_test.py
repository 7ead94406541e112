import tempfile
import unittest

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from lfdfnet.data_generators.light_field import ColorSpace, LightField
from lfdfnet.data_generators.resize import resize_bicubic
from lfdfnet.exceptions import ColorSpaceError, LightFieldShapeError
from lfdfnet.models.hf_models.config import VARIANTS, LfDfnetConfig
from lfdfnet.models.hf_models.hf_lfdfnet import (
    LfDfnetModel,
    OffsetBranch,
    merge_center,
    model_manifest,
    split_center,
    write_model_manifest,
)
from lfdfnet.utils.model_utils import read_json

TINY = dict(
    angular_resolution=3,
    channels=4,
    num_adams=1,
    num_imdbs=1,
    fem_units=1,
    aspp_blocks_per_module=1,
    imdb_width=8,
    imdb_narrow=2,
    imdb_stages=2,
)


def _tiny_config(**overrides) -> LfDfnetConfig:
    return LfDfnetConfig(**{**TINY, **overrides})


def _param_count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


class ViewOrderTest(unittest.TestCase):
    def test_split_and_merge_center(self):
        views = torch.arange(2 * 9).reshape(2, 9, 1, 1, 1)
        center, sides = split_center(views, 4)
        self.assertEqual(center[:, 0, 0, 0].tolist(), [4, 13])
        self.assertEqual(sides[0, :, 0, 0, 0].tolist(), [0, 1, 2, 3, 5, 6, 7, 8])
        torch.testing.assert_close(merge_center(center, sides, 4), views)


class LfDfnetModelTest(unittest.TestCase):
    def setUp(self):
        self.config = _tiny_config()
        self.model = LfDfnetModel(self.config)
        self.lr_views = torch.rand(2, 3, 3, 6, 7, generator=torch.Generator().manual_seed(0))

    def test_output_shapes(self):
        labels = torch.rand(2, 3, 3, 12, 14)
        output = self.model(lr_views=self.lr_views, labels=labels, output_offsets=True)
        self.assertEqual(tuple(output.sr_views.shape), (2, 3, 3, 12, 14))
        self.assertEqual(len(output.collect_offsets), 1)
        self.assertEqual(tuple(output.collect_offsets[0].shape), (2, 8, 18, 6, 7))
        self.assertEqual(tuple(output.distribute_offsets[0].shape), (2, 8, 18, 6, 7))
        torch.testing.assert_close(output.loss, torch.mean(torch.abs(output.sr_views - labels)))

    def test_tuple_output(self):
        outputs = self.model(lr_views=self.lr_views, return_dict=False)
        self.assertEqual(len(outputs), 1)
        self.assertEqual(tuple(outputs[0].shape), (2, 3, 3, 12, 14))
        self.assertIsNone(self.model(lr_views=self.lr_views).collect_offsets)

    def test_rejects_wrong_angular_size(self):
        with self.assertRaises(LightFieldShapeError):
            self.model(lr_views=torch.rand(1, 5, 5, 6, 6))
        with self.assertRaises(LightFieldShapeError):
            self.model(lr_views=torch.rand(3, 3, 6, 6))

    def test_initialisation_is_seeded(self):
        same = LfDfnetModel(_tiny_config())
        other = LfDfnetModel(_tiny_config(initializer_seed=1))
        for (name, a), b, c in zip(
            self.model.state_dict().items(), same.state_dict().values(), other.state_dict().values()
        ):
            torch.testing.assert_close(a, b, msg=name)
        self.assertFalse(
            all(torch.equal(a, c) for a, c in zip(self.model.state_dict().values(), other.state_dict().values()))
        )

    def test_building_a_model_leaves_the_global_generator_alone(self):
        torch.manual_seed(123)
        expected = torch.rand(4)
        torch.manual_seed(123)
        LfDfnetModel(_tiny_config())
        torch.testing.assert_close(torch.rand(4), expected)

    def test_offsets_start_at_zero(self):
        output = self.model(lr_views=self.lr_views, output_offsets=True)
        self.assertTrue(torch.all(output.collect_offsets[0] == 0))
        self.assertTrue(torch.all(output.distribute_offsets[0] == 0))

    def test_collect_and_distribute_use_one_deformable_kernel(self):
        adam = self.model.adams[0]
        generator = torch.Generator().manual_seed(3)
        center = torch.rand(2, 4, 6, 7, generator=generator)
        sides = torch.rand(2, 8, 4, 6, 7, generator=generator)
        fused = torch.rand(2, 9 * 4, 6, 7, generator=generator)
        with torch.no_grad():
            collected, _ = adam.collect(center, sides)
            new_center, distributed, _ = adam.distribute(fused, center, sides)
            adam.deform_conv.weight.add_(0.5)
            collected_after, _ = adam.collect(center, sides)
            new_center_after, distributed_after, _ = adam.distribute(fused, center, sides)
        self.assertFalse(torch.allclose(collected, collected_after))
        self.assertFalse(torch.allclose(distributed, distributed_after))
        # The center path has no deformable sampling
        torch.testing.assert_close(new_center, new_center_after)
        self.assertEqual([name for name, _ in adam.named_modules() if name.endswith("deform_conv")], ["deform_conv"])

    def test_initial_deformable_convs_are_rigid_and_skip_the_center(self):
        deform_conv = self.model.adams[0].deform_conv
        calls = []

        def hook(module, inputs, output):
            features, offsets = inputs
            calls.append(features.shape[0])
            rigid = F.conv2d(features, module.weight, module.bias, padding=module.kernel_size // 2)
            torch.testing.assert_close(output, rigid, atol=1e-5, rtol=1e-4)

        handle = deform_conv.register_forward_hook(hook)
        try:
            self.model(lr_views=self.lr_views)
        finally:
            handle.remove()
        # Collection and distribution each sample the eight side views of both batch items
        self.assertEqual(calls, [2 * 8, 2 * 8])

    def test_every_parameter_receives_a_gradient(self):
        model = LfDfnetModel(_tiny_config(num_adams=2)).double()
        for module in model.modules():
            if isinstance(module, OffsetBranch):
                nn.init.normal_(module.offset_head.weight, std=0.1)
                nn.init.normal_(module.offset_head.bias, std=0.1)
        lr_views = self.lr_views.double()
        labels = torch.rand(2, 3, 3, 12, 14, dtype=torch.float64)
        model(lr_views=lr_views, labels=labels).loss.backward()
        for name, parameter in model.named_parameters():
            self.assertIsNotNone(parameter.grad, name)
            self.assertTrue(torch.any(parameter.grad != 0), name)

    def test_global_residual_adds_the_bicubic_upscaling(self):
        model = LfDfnetModel(self.config)
        nn.init.zeros_(model.reconstruction.to_y.weight)
        nn.init.zeros_(model.reconstruction.to_y.bias)
        with torch.no_grad():
            sr_views = model(lr_views=self.lr_views).sr_views
        torch.testing.assert_close(sr_views, resize_bicubic(self.lr_views, 2, clamp=False))

        no_residual = LfDfnetModel(_tiny_config(global_residual=False))
        nn.init.zeros_(no_residual.reconstruction.to_y.weight)
        nn.init.zeros_(no_residual.reconstruction.to_y.bias)
        with torch.no_grad():
            self.assertTrue(torch.all(no_residual(lr_views=self.lr_views).sr_views == 0))

    def test_upscale_factors(self):
        for alpha in (1, 3, 4):
            with self.subTest(alpha=alpha):
                model = LfDfnetModel(_tiny_config(upscale_factor=alpha))
                with torch.no_grad():
                    sr_views = model(lr_views=torch.rand(1, 3, 3, 4, 5)).sr_views
                self.assertEqual(tuple(sr_views.shape), (1, 3, 3, 4 * alpha, 5 * alpha))

    def test_save_and_load_pretrained(self):
        with tempfile.TemporaryDirectory() as tmp:
            self.model.save_pretrained(tmp)
            loaded = LfDfnetModel.from_pretrained(tmp)
        with torch.no_grad():
            torch.testing.assert_close(
                loaded(lr_views=self.lr_views).sr_views, self.model(lr_views=self.lr_views).sr_views
            )


class VariantTest(unittest.TestCase):
    def setUp(self):
        self.lr_views = torch.rand(1, 3, 3, 6, 6, generator=torch.Generator().manual_seed(2), dtype=torch.float64)
        self.perturbed = self.lr_views.clone()
        self.perturbed[0, 0, 0] += 0.5

    def _view_changes(self, variant: str):
        """Largest output change of every view when only the top-left input view is perturbed."""
        model = LfDfnetModel(_tiny_config(variant=variant, num_adams=2)).double()
        with torch.no_grad():
            base = model(lr_views=self.lr_views).sr_views[0]
            perturbed = model(lr_views=self.perturbed).sr_views[0]
        return {(u, v): float((base[u, v] - perturbed[u, v]).abs().max()) for u in range(3) for v in range(3)}

    def test_every_variant_runs(self):
        for variant in VARIANTS:
            with self.subTest(variant=variant):
                model = LfDfnetModel(_tiny_config(variant=variant))
                output = model(lr_views=torch.rand(1, 3, 3, 6, 6), output_offsets=True)
                self.assertEqual(tuple(output.sr_views.shape), (1, 3, 3, 12, 12))
                has_offsets = variant not in ("no_dcn", "no_adam")
                self.assertEqual(output.collect_offsets[0] is not None, has_offsets)

    def test_without_alignment_views_stay_independent(self):
        changes = self._view_changes("no_adam")
        self.assertEqual([view for view, change in changes.items() if change > 1e-9], [(0, 0)])
        self.assertTrue(all(change < 1e-12 for view, change in changes.items() if view != (0, 0)))

    def test_without_distribution_side_views_ignore_each_other(self):
        changes = self._view_changes("no_dist")
        for view, change in changes.items():
            if view not in ((0, 0), (1, 1)):
                self.assertLess(change, 1e-12, view)
        self.assertGreater(changes[(1, 1)], 1e-9)

    def test_full_model_propagates_side_views_to_the_center(self):
        changes = self._view_changes("full")
        self.assertGreater(changes[(1, 1)], 1e-9)
        self.assertGreater(changes[(2, 2)], 1e-9)

    def test_parameter_accounting(self):
        full = LfDfnetModel(_tiny_config(num_adams=3))
        no_dcn = LfDfnetModel(_tiny_config(num_adams=3, variant="no_dcn"))
        branch = _param_count(full.adams[0].offset_branch)
        self.assertEqual(_param_count(full) - _param_count(no_dcn), 3 * branch)

    def test_degenerate_model(self):
        channels, alpha = 4, 2
        model = LfDfnetModel(_tiny_config(num_adams=0, num_imdbs=0, fem_units=0))
        expected = (
            (channels + channels)
            + (channels * channels + channels)
            + (channels * alpha**2 * channels + alpha**2 * channels)
            + (channels + 1)
        )
        self.assertEqual(_param_count(model), expected)
        self.assertEqual(tuple(model(lr_views=torch.rand(1, 3, 3, 4, 4)).sr_views.shape), (1, 3, 3, 8, 8))


class SuperResolveTest(unittest.TestCase):
    def setUp(self):
        self.model = LfDfnetModel(_tiny_config())
        self.rng = np.random.default_rng(4)

    def test_y_light_field(self):
        lf = LightField(data=self.rng.random((3, 3, 6, 5, 1)).astype(np.float32))
        self.model.train()
        sr = self.model.super_resolve(lf)
        self.assertTrue(self.model.training)
        self.assertEqual(sr.data.shape, (3, 3, 12, 10, 1))
        self.assertEqual(sr.color_space, ColorSpace.Y)
        self.assertGreaterEqual(sr.data.min(), 0.0)
        self.assertLessEqual(sr.data.max(), 1.0)

    def test_rgb_light_field(self):
        lf = LightField(data=self.rng.random((3, 3, 6, 6, 3)).astype(np.float32), color_space=ColorSpace.RGB)
        with self.assertRaises(ColorSpaceError):
            self.model.super_resolve(lf)
        sr = self.model.super_resolve_rgb(lf)
        self.assertEqual(sr.color_space, ColorSpace.RGB)
        self.assertEqual(sr.data.shape, (3, 3, 12, 12, 3))

    def test_manifest(self):
        manifest = model_manifest(self.model)
        self.assertEqual(manifest["num_parameters"], _param_count(self.model))
        self.assertEqual(manifest["creation_seed"], 0)
        self.assertEqual(manifest["config"]["channels"], 4)
        with tempfile.TemporaryDirectory() as tmp:
            write_model_manifest(self.model, f"{tmp}/model_manifest.json", seed=9)
            self.assertEqual(read_json(f"{tmp}/model_manifest.json")["creation_seed"], 9)


if __name__ == "__main__":
    unittest.main()
