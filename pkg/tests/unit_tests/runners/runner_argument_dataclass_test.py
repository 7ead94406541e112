import dataclasses
import unittest

from lfdfnet.data_generators.synthetic.renderer import DEFAULT_BASELINE_MULTIPLIERS
from lfdfnet.exceptions import ConfigError
from lfdfnet.runners.runner_argument_dataclass import (
    AblationArguments,
    EvaluationArguments,
    GenerateArguments,
    ModelArguments,
    PlotArguments,
    RunConfig,
    SweepArguments,
    TrainConfig,
)


class ModelArgumentsTest(unittest.TestCase):
    def test_to_config(self):
        config = ModelArguments(angular_resolution=3, channels=8, variant="no_dcn").to_config(seed=4, num_adams=1)
        self.assertEqual(config.angular_resolution, 3)
        self.assertEqual(config.channels, 8)
        self.assertEqual(config.variant, "no_dcn")
        self.assertEqual(config.num_adams, 1)
        self.assertEqual(config.initializer_seed, 4)
        self.assertEqual(config.imdb_width, 32)

    def test_rejects_unknown_variant(self):
        with self.assertRaises(ConfigError):
            ModelArguments(variant="no_fusion")
        with self.assertRaises(ConfigError):
            ModelArguments(angular_resolution=4).to_config()


class TrainConfigTest(unittest.TestCase):
    def test_defaults(self):
        config = TrainConfig()
        self.assertEqual(config.lr0, 2e-4)
        self.assertEqual(config.decay_factor, 0.5)
        self.assertEqual(config.decay_every, 15)
        self.assertEqual(config.adam_betas, [0.9, 0.999])
        self.assertTrue(config.deterministic)

    def test_rejects_invalid_values(self):
        invalid = [
            {"batch_size": 0},
            {"lr0": 0.0},
            {"decay_every": 0},
            {"patch_size": -32},
            {"total_epochs": -1},
            {"max_steps": -1},
            {"adam_betas": [0.9]},
        ]
        for kwargs in invalid:
            with self.subTest(**kwargs):
                with self.assertRaises(ConfigError):
                    TrainConfig(**kwargs)

    def test_check_alpha(self):
        TrainConfig(patch_size=32).check_alpha(4)
        with self.assertRaises(ConfigError):
            TrainConfig(patch_size=30).check_alpha(4)


class CommandArgumentsTest(unittest.TestCase):
    def test_generate(self):
        self.assertEqual(GenerateArguments().kd_list, [0, 1, 2, 3, 4])
        self.assertEqual(SweepArguments().kd_list, list(DEFAULT_BASELINE_MULTIPLIERS))
        # Each instance owns its list
        GenerateArguments().kd_list.append(9)
        self.assertEqual(GenerateArguments().kd_list, list(DEFAULT_BASELINE_MULTIPLIERS))
        with self.assertRaises(ConfigError):
            GenerateArguments(kd_list=[0, -1])

    def test_ablation(self):
        arguments = AblationArguments(variants=["full"], variant_overrides='{"no_adam": {"channels": 48}}')
        self.assertEqual(arguments.variant_overrides, {"no_adam": {"channels": 48}})
        self.assertEqual(AblationArguments().variant_overrides, {})
        with self.assertRaises(ConfigError):
            AblationArguments(variant_overrides="{not json")
        with self.assertRaises(ConfigError):
            AblationArguments(variants=["no_fusion"])
        with self.assertRaises(ConfigError):
            AblationArguments(variant_overrides={"no_fusion": {}})
        with self.assertRaises(ConfigError):
            AblationArguments(adam_counts=[0, 1])

    def test_run_config(self):
        self.assertEqual(RunConfig(command="eval").overrides, [])
        with self.assertRaises(ConfigError):
            RunConfig(command="serve")

    def test_literal_fields_reject_values_outside_their_choices(self):
        self.assertEqual(EvaluationArguments(resolver="bicubic").resolver, "bicubic")
        self.assertEqual(PlotArguments(image_format="svg").image_format, "svg")
        invalid = [
            (EvaluationArguments, {"resolver": "gpu"}),
            (EvaluationArguments, {"resolver": "model'"}),
            (PlotArguments, {"image_format": "pdf"}),
            (PlotArguments, {"image_format": "png'"}),
            (ModelArguments, {"variant": "full'"}),
        ]
        for cls, kwargs in invalid:
            with self.subTest(cls=cls.__name__, **kwargs):
                with self.assertRaises(ConfigError):
                    cls(**kwargs)

    def test_no_field_carries_a_choices_string(self):
        for cls in (ModelArguments, EvaluationArguments, PlotArguments, RunConfig):
            for field in dataclasses.fields(cls):
                with self.subTest(cls=cls.__name__, field=field.name):
                    self.assertNotIsInstance(field.metadata.get("choices"), str)


if __name__ == "__main__":
    unittest.main()
