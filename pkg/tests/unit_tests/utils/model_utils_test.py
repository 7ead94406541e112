import enum
import logging
import tempfile
import unittest
from pathlib import Path

import numpy as np
import torch

from lfdfnet.utils.logging_utils import add_console_logging
from lfdfnet.utils.model_utils import create_folder_if_not_exist, enable_determinism, md5, read_json, write_json


class _Color(enum.Enum):
    Y = "Y"


class ModelUtilsTest(unittest.TestCase):
    def test_md5(self):
        self.assertEqual(md5("hello"), "5d41402abc4b2a76b9719d911017c592")

    def test_create_folder_if_not_exist(self):
        with tempfile.TemporaryDirectory() as tmp:
            folder = create_folder_if_not_exist(tmp, "a/b")
            self.assertTrue(folder.is_dir())
            self.assertEqual(folder, Path(tmp) / "a" / "b")
            self.assertEqual(create_folder_if_not_exist(str(folder)), folder)

    def test_json_handles_numpy_paths_and_enums(self):
        payload = {
            "count": np.int64(3),
            "value": np.float32(0.5),
            "grid": np.arange(4).reshape(2, 2),
            "path": Path("/data/scene"),
            "color": _Color.Y,
        }
        with tempfile.TemporaryDirectory() as tmp:
            path = write_json(payload, Path(tmp) / "nested" / "payload.json")
            restored = read_json(path)
        self.assertEqual(
            restored, {"count": 3, "value": 0.5, "grid": [[0, 1], [2, 3]], "path": "/data/scene", "color": "Y"}
        )
        with tempfile.TemporaryDirectory() as tmp, self.assertRaises(TypeError):
            write_json({"bad": object()}, Path(tmp) / "bad.json")

    def test_enable_determinism(self):
        previous = torch.are_deterministic_algorithms_enabled()
        try:
            enable_determinism(5)
            first = torch.rand(3)
            enable_determinism(5)
            torch.testing.assert_close(torch.rand(3), first)
            self.assertTrue(torch.are_deterministic_algorithms_enabled())
        finally:
            torch.use_deterministic_algorithms(previous)


class LoggingUtilsTest(unittest.TestCase):
    def test_console_logging_is_added_once(self):
        root = logging.getLogger()
        before = list(root.handlers)
        level = root.level
        try:
            add_console_logging()
            add_console_logging(logging.DEBUG)
            added = [handler for handler in root.handlers if handler not in before]
            self.assertLessEqual(len(added), 1)
            self.assertTrue(any(getattr(handler, "_lfdfnet_console", False) for handler in root.handlers))
            self.assertEqual(root.level, logging.DEBUG)
        finally:
            for handler in root.handlers[:]:
                if handler not in before:
                    root.removeHandler(handler)
            root.setLevel(level)


if __name__ == "__main__":
    unittest.main()
