import unittest

import torch
from torch import nn

from lfdfnet.exceptions import LightFieldShapeError
from lfdfnet.models.layers.custom_layers import (
    IMDB,
    BlockConfig,
    ResidualASPPBlock,
    ResidualASPPModule,
    ResidualBlock,
    pixel_shuffle,
    pixel_unshuffle,
)


def _param_count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def _response_box(module: nn.Module, channels: int, size: int = 21):
    """Bounding box of the output positions that react to an impulse at the center."""
    zeros = torch.zeros(1, channels, size, size, dtype=torch.float64)
    impulse = zeros.clone()
    impulse[0, 0, size // 2, size // 2] = 1.0
    with torch.no_grad():
        changed = (module(impulse) - module(zeros)).abs().sum(dim=(0, 1)) > 1e-12
    rows, cols = torch.nonzero(changed, as_tuple=True)
    return int(rows.min()), int(rows.max()), int(cols.min()), int(cols.max())


class BlockConfigTest(unittest.TestCase):
    def test_defaults_follow_the_channel_count(self):
        config = BlockConfig(channels=32)
        self.assertEqual(config.imdb_width, 128)
        self.assertEqual(config.imdb_narrow, 32)
        self.assertEqual(config.imdb_wide, 96)
        self.assertEqual(BlockConfig(channels=8).imdb_width, 32)

    def test_rejects_an_invalid_split(self):
        with self.assertRaises(LightFieldShapeError):
            BlockConfig(channels=8, imdb_width=16, imdb_narrow=16)
        with self.assertRaises(LightFieldShapeError):
            BlockConfig(channels=8, imdb_narrow=0)

    def test_blocks_are_built_from_it(self):
        blocks = BlockConfig(
            channels=8, aspp_dilations=(1, 3), leaky_slope=0.2, aspp_blocks_per_module=3, imdb_width=16, imdb_stages=2
        )
        aspp = ResidualASPPModule.from_block_config(blocks)
        self.assertEqual(len(aspp.blocks), 3)
        self.assertEqual([conv.dilation for conv in aspp.blocks[0].atrous], [(1, 1), (3, 3)])
        self.assertEqual(aspp.blocks[0].act.negative_slope, 0.2)
        self.assertEqual(ResidualBlock.from_block_config(blocks).channels, 8)
        imdb = IMDB.from_block_config(blocks)
        self.assertEqual((imdb.in_channels, imdb.width, imdb.narrow, imdb.wide), (8, 16, 8, 8))
        self.assertEqual(len(imdb.refine), 2)


class ResidualASPPTest(unittest.TestCase):
    def setUp(self):
        torch.manual_seed(0)

    def test_block_shape_and_parameters(self):
        block = ResidualASPPBlock(8)
        self.assertEqual(tuple(block(torch.rand(2, 8, 10, 12)).shape), (2, 8, 10, 12))
        self.assertEqual(_param_count(block), 3 * (8 * 8 * 9 + 8) + (3 * 8 * 8 + 8))
        self.assertEqual([conv.dilation for conv in block.atrous], [(1, 1), (2, 2), (4, 4)])

    def test_block_receptive_field(self):
        block = ResidualASPPBlock(4).double()
        self.assertEqual(_response_box(block, 4), (6, 14, 6, 14))

    def test_module_stacks_blocks(self):
        module = ResidualASPPModule(4, num_blocks=2).double()
        self.assertEqual(len(module.blocks), 2)
        self.assertEqual(_response_box(module, 4), (2, 18, 2, 18))

    def test_rejects_a_channel_mismatch(self):
        with self.assertRaises(LightFieldShapeError):
            ResidualASPPBlock(8)(torch.rand(1, 4, 8, 8))


class ResidualBlockTest(unittest.TestCase):
    def test_zero_second_conv_is_the_identity(self):
        block = ResidualBlock(6)
        nn.init.zeros_(block.conv2.weight)
        nn.init.zeros_(block.conv2.bias)
        features = torch.rand(2, 6, 5, 5)
        torch.testing.assert_close(block(features), features)
        with self.assertRaises(LightFieldShapeError):
            block(torch.rand(2, 5, 5, 5))


class IMDBTest(unittest.TestCase):
    def test_default_widths(self):
        block = IMDB(32)
        self.assertEqual(block.width, 128)
        self.assertEqual(block.narrow, 32)
        self.assertEqual(block.wide, 96)
        self.assertEqual(block.bottleneck_channels, 3 * 32 + 128)
        self.assertEqual(block.bottleneck.in_channels, 224)

    def test_shape_and_parameters(self):
        block = IMDB(8, width=16, narrow=4, stages=3)
        self.assertEqual(tuple(block(torch.rand(2, 8, 6, 7)).shape), (2, 8, 6, 7))
        expected = (8 * 16 * 9 + 16) + 3 * (12 * 16 * 9 + 16) + ((3 * 4 + 16) * 8 + 8)
        self.assertEqual(_param_count(block), expected)

    def test_zero_bottleneck_is_the_identity(self):
        block = IMDB(8, width=16, narrow=4, stages=2)
        nn.init.zeros_(block.bottleneck.weight)
        nn.init.zeros_(block.bottleneck.bias)
        features = torch.rand(1, 8, 5, 5)
        torch.testing.assert_close(block(features), features)

    def test_rejects_invalid_widths(self):
        with self.assertRaises(LightFieldShapeError):
            IMDB(8, width=16, narrow=16)
        with self.assertRaises(LightFieldShapeError):
            IMDB(8, width=16, narrow=4, stages=0)
        with self.assertRaises(LightFieldShapeError):
            IMDB(8, width=16, narrow=4)(torch.rand(1, 4, 5, 5))


class PixelShuffleTest(unittest.TestCase):
    def test_layout(self):
        alpha = 2
        features = torch.arange(2 * 4 * 3 * 3, dtype=torch.float32).reshape(1, 8, 3, 3)
        shuffled = pixel_shuffle(features, alpha)
        self.assertEqual(tuple(shuffled.shape), (1, 2, 6, 6))
        for c in range(2):
            for i in range(alpha):
                for j in range(alpha):
                    torch.testing.assert_close(
                        shuffled[0, c, i::alpha, j::alpha], features[0, c * alpha * alpha + i * alpha + j]
                    )
        torch.testing.assert_close(pixel_unshuffle(shuffled, alpha), features)

    def test_rejects_incompatible_sizes(self):
        with self.assertRaises(LightFieldShapeError):
            pixel_shuffle(torch.zeros(1, 6, 3, 3), 2)
        with self.assertRaises(LightFieldShapeError):
            pixel_unshuffle(torch.zeros(1, 1, 5, 6), 2)
        with self.assertRaises(LightFieldShapeError):
            pixel_shuffle(torch.zeros(1, 4, 3, 3), 0)


if __name__ == "__main__":
    unittest.main()
