import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from lfdfnet.data_generators.synthetic.renderer import disparity_range
from lfdfnet.data_generators.synthetic.scene_spec import SceneSpec
from lfdfnet.evaluations.disparity_sweep import GROUND_TRUTH, column_header, disparity_sweep, kd_label
from lfdfnet.evaluations.evaluation import BicubicSuperResolver, IdentitySuperResolver
from lfdfnet.exceptions import ConfigError
from lfdfnet.utils.model_utils import read_json


class KdLabelTest(unittest.TestCase):
    def test_labels(self):
        self.assertEqual(kd_label(0), "kd0")
        self.assertEqual(kd_label(1.5), "kd1.5")
        self.assertEqual(kd_label(2.0), "kd2")

    def test_column_header(self):
        self.assertEqual(column_header("kd2", (0.5, 1.0)), "kd2 d∈[0.50,1.00]")
        self.assertEqual(column_header("kd0", (-0.0, 0.0)), "kd0 d∈[0.00,0.00]")


class DisparitySweepTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.scene = SceneSpec.random(seed=8, angular_res=3, spatial_res=(32, 32))
        cls.result = disparity_sweep({}, cls.scene, [0, 1], upscale_factor=2)

    def test_table(self):
        table = self.result.table
        self.assertEqual(list(table.index), ["bicubic"])
        self.assertEqual(list(table.columns), ["kd0", "kd1"])
        self.assertTrue(np.all(np.isfinite(table.to_numpy())))

    def test_disparity_ranges_and_epis(self):
        self.assertEqual(self.result.disparity_ranges["kd1"], disparity_range(self.scene, 1))
        self.assertEqual(self.result.disparity_ranges["kd0"], disparity_range(self.scene, 0))
        for label in ("kd0", "kd1"):
            epis = self.result.epis[label]
            self.assertEqual(set(epis), {GROUND_TRUTH, "bicubic"})
            self.assertEqual(epis[GROUND_TRUTH].shape, epis["bicubic"].shape)

    def test_named_models_keep_their_rows(self):
        result = disparity_sweep({"cubic": BicubicSuperResolver(2)}, self.scene, [1], include_bicubic=False)
        self.assertEqual(list(result.table.index), ["cubic"])
        self.assertAlmostEqual(result.table.loc["cubic", "kd1"], self.result.table.loc["bicubic", "kd1"])

    def test_write(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = self.result.write(tmp)
            self.assertEqual(path, Path(tmp) / "sweep.csv")
            table = pd.read_csv(path, index_col="model")
            np.testing.assert_allclose(table.to_numpy(), self.result.table.to_numpy())
            self.assertEqual(
                list(table.columns),
                [column_header(f"kd{k}", disparity_range(self.scene, k)) for k in (0, 1)],
            )
            ranges = read_json(Path(tmp) / "sweep_disparity.json")
            self.assertEqual(set(ranges), {"kd0", "kd1"})
            for file_name in ("epi_kd0.png", "epi_kd1.png", "sweep.png"):
                self.assertTrue((Path(tmp) / file_name).exists(), file_name)

    def test_rejects_invalid_sweeps(self):
        with self.assertRaises(ConfigError):
            disparity_sweep({}, self.scene, [0], include_bicubic=False)
        with self.assertRaises(ConfigError):
            disparity_sweep(
                {"identity": IdentitySuperResolver(), "cubic": BicubicSuperResolver(2)}, self.scene, [0]
            )


if __name__ == "__main__":
    unittest.main()
