import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from transformers.utils import logging

from lfdfnet.data_generators.lf_dataset import LightFieldPatchDataset, load_y_scenes, resolve_data_root
from lfdfnet.data_generators.synthetic.renderer import write_scene_dataset
from lfdfnet.data_generators.synthetic.scene_spec import SceneSpec
from lfdfnet.evaluations.ablation import ablate
from lfdfnet.evaluations.disparity_sweep import disparity_sweep, kd_label
from lfdfnet.evaluations.evaluation import (
    BicubicSuperResolver,
    IdentitySuperResolver,
    ModelSuperResolver,
    SuperResolver,
    evaluate,
)
from lfdfnet.evaluations.plotting import plot_ablation, plot_from_file, plot_report_heatmaps
from lfdfnet.exceptions import ColorSpaceError, ConfigError, DatasetError, LightFieldShapeError, NonFiniteLossError
from lfdfnet.models.hf_models.config import VARIANTS
from lfdfnet.models.hf_models.hf_lfdfnet import LfDfnetModel
from lfdfnet.runners.runner_argument_dataclass import COMMANDS, RunConfig
from lfdfnet.runners.runner_util import (
    COMMAND_SECTIONS,
    apply_overrides,
    effective_config,
    load_config_file,
    load_model,
    parse_kd_list,
    parse_sections,
)
from lfdfnet.trainers.lfdfnet_trainer import LfDfnetTrainer
from lfdfnet.utils.checkpoint_utils import EFFECTIVE_CONFIG_FILE
from lfdfnet.utils.logging_utils import add_console_logging
from lfdfnet.utils.model_utils import create_folder_if_not_exist, write_json

LOG = logging.get_logger(__name__)

EXIT_OK = 0
EXIT_UNKNOWN = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SHAPE = 4
EXIT_NON_FINITE = 5

DEFAULT_OUTPUT_ROOT = "lfdfnet_output"


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as ConfigError so they share the one-line error format and exit code."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="lfdfnet", description="Light field super-resolution with deformable alignment")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        subparser = subparsers.add_parser(command)
        subparser.add_argument("--config", dest="config_path", help="JSON or YAML config nested by section")
        subparser.add_argument("--seed", type=int, help="Overrides training.seed")
        subparser.add_argument("--out", dest="output_dir", help="Output directory")
        subparser.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="Config override, repeatable",
        )
        subparser.add_argument("--variant", choices=VARIANTS, help="Overrides model.variant")
        subparser.add_argument("--alpha", type=int, choices=(2, 4), help="Overrides model.upscale_factor")
        if command in ("generate", "sweep"):
            subparser.add_argument("--scene", help="Scene description JSON")
            subparser.add_argument("--kd", help="Baseline multipliers, '0..4' or '0,1,2'")
        if command == "train":
            subparser.add_argument("--epochs", type=int, help="Overrides training.total_epochs")
            subparser.add_argument("--resume", help="Checkpoint to resume from, or 'latest'")
        if command == "eval":
            subparser.add_argument("--checkpoint", help="Checkpoint or model directory to evaluate")
            subparser.add_argument("--data", help="Evaluation dataset root")
        if command in ("train", "ablate"):
            subparser.add_argument("--data", help="Training dataset root")
        if command == "plot":
            subparser.add_argument("--report", help="Metric report JSON, sweep or ablation CSV")
    return parser


def _flag_overrides(command: str, namespace: argparse.Namespace) -> Dict[str, Any]:
    """Maps the convenience flags onto dotted config keys."""
    overrides = {
        "model.variant": namespace.variant,
        "model.upscale_factor": namespace.alpha,
    }
    if command in ("train", "ablate"):
        overrides["training.seed"] = namespace.seed
        overrides["data.data_folder"] = namespace.data
    if command == "train":
        overrides["training.total_epochs"] = namespace.epochs
        overrides["training.resume_from_checkpoint"] = namespace.resume
    if command == "eval":
        overrides["eval.checkpoint"] = namespace.checkpoint
        overrides["data.test_data_folder"] = namespace.data
    if command in ("generate", "sweep"):
        overrides[f"{command}.scene_path"] = namespace.scene
        overrides[f"{command}.kd_list"] = None if namespace.kd is None else parse_kd_list(namespace.kd)
    if command == "plot":
        overrides["plot.report_path"] = namespace.report
    return {key: value for key, value in overrides.items() if value is not None}


def _merge(config: Dict[str, Dict[str, Any]], overrides: Dict[str, Any]) -> Dict[str, Dict[str, Any]]:
    for dotted_key, value in overrides.items():
        section, key = dotted_key.split(".", 1)
        config.setdefault(section, {})[key] = value
    return config


def run_generate(sections: Dict[str, Any], run_config: RunConfig) -> None:
    generate_args = sections["generate"]
    scenes: List[SceneSpec] = []
    if generate_args.scene_path:
        scenes.append(SceneSpec.from_json(Path(generate_args.scene_path)))
    for index in range(generate_args.num_random_scenes):
        scenes.append(
            SceneSpec.random(
                seed=generate_args.random_seed_offset + index,
                angular_res=generate_args.random_angular_res,
                spatial_res=tuple(generate_args.random_spatial_res),
                num_layers=generate_args.random_num_layers,
                unit_disparity=generate_args.unit_disparity,
            )
        )
    if not scenes:
        raise ConfigError("Nothing to generate: set generate.scene_path (--scene) or generate.num_random_scenes")
    for scene in scenes:
        for k_d in generate_args.kd_list:
            write_scene_dataset(scene, k_d, Path(run_config.output_dir) / f"{scene.name}_{kd_label(k_d)}")


def run_train(sections: Dict[str, Any], run_config: RunConfig) -> None:
    data_args, model_args, train_config = sections["data"], sections["model"], sections["training"]
    train_config.check_alpha(model_args.upscale_factor)
    dataset = LightFieldPatchDataset.from_directory(
        resolve_data_root(data_args.data_folder),
        angular_resolution=model_args.angular_resolution,
        patch_size=train_config.patch_size,
        stride=train_config.stride,
        alpha=model_args.upscale_factor,
    )
    trainer = LfDfnetTrainer(model_args.to_config(seed=train_config.seed), train_config, dataset)
    checkpoint = trainer.fit()
    trainer.model.save_pretrained(str(Path(run_config.output_dir) / "model"))
    LOG.info("Training finished at epoch %d, last checkpoint %s", checkpoint.epoch, checkpoint.path)

    if data_args.test_data_folder:
        report = evaluate(
            ModelSuperResolver(trainer.model),
            data_args.test_data_folder,
            angular_resolution=model_args.angular_resolution,
        )
        report.write(run_config.output_dir, "test_metric_report")


def _resolver_for(sections: Dict[str, Any], seed: int) -> SuperResolver:
    model_args, eval_args = sections["model"], sections["eval"]
    if eval_args.resolver == "bicubic":
        return BicubicSuperResolver(model_args.upscale_factor)
    if eval_args.resolver == "identity":
        return IdentitySuperResolver()
    if eval_args.checkpoint:
        return ModelSuperResolver(load_model(eval_args.checkpoint))
    LOG.info("No checkpoint given, evaluating a freshly initialised model (seed %d)", seed)
    return ModelSuperResolver(LfDfnetModel(model_args.to_config(seed=seed)).eval())


def run_eval(sections: Dict[str, Any], run_config: RunConfig) -> None:
    data_args, model_args, eval_args = sections["data"], sections["model"], sections["eval"]
    resolver = _resolver_for(sections, run_config.seed or 0)
    if isinstance(resolver, ModelSuperResolver):
        angular_resolution = resolver.model.config.angular_resolution
    else:
        angular_resolution = model_args.angular_resolution
    report = evaluate(
        resolver,
        resolve_data_root(data_args.test_data_folder or data_args.data_folder),
        angular_resolution=angular_resolution,
    )
    report.write(run_config.output_dir, eval_args.report_name)
    if eval_args.heatmaps:
        plot_report_heatmaps(report, run_config.output_dir)


def run_sweep(sections: Dict[str, Any], run_config: RunConfig) -> None:
    model_args, sweep_args = sections["model"], sections["sweep"]
    if not sweep_args.scene_path:
        raise ConfigError("The sweep needs a scene description: set sweep.scene_path (--scene)")
    scene = SceneSpec.from_json(Path(sweep_args.scene_path))
    models = {}
    for entry in sweep_args.checkpoints:
        if "=" not in entry:
            raise ConfigError(f"Sweep checkpoint {entry!r} is not of the form name=path")
        name, path = entry.split("=", 1)
        models[name] = ModelSuperResolver(load_model(path), name=name)
    result = disparity_sweep(
        models,
        scene,
        sweep_args.kd_list,
        epi_row=sweep_args.epi_row,
        upscale_factor=model_args.upscale_factor,
    )
    result.write(run_config.output_dir)


def run_ablate(sections: Dict[str, Any], run_config: RunConfig) -> None:
    data_args, model_args, train_config, ablate_args = (
        sections["data"],
        sections["model"],
        sections["training"],
        sections["ablate"],
    )
    alpha = model_args.upscale_factor
    train_config.check_alpha(alpha)
    train_dataset = LightFieldPatchDataset.from_directory(
        resolve_data_root(data_args.data_folder),
        angular_resolution=model_args.angular_resolution,
        patch_size=train_config.patch_size,
        stride=train_config.stride,
        alpha=alpha,
    )
    eval_root = resolve_data_root(data_args.test_data_folder or data_args.data_folder)
    eval_scenes = [(name, lf) for name, lf, _ in load_y_scenes(eval_root, model_args.angular_resolution, alpha)]
    base_kwargs = dataclasses.asdict(model_args)
    frame = ablate(
        base_kwargs,
        train_config,
        train_dataset,
        eval_scenes,
        run_config.output_dir,
        variants=ablate_args.variants,
        adam_counts=ablate_args.adam_counts,
        variant_overrides=ablate_args.variant_overrides,
    )
    plot_ablation(frame, Path(run_config.output_dir) / "ablation.png")
    LOG.info("Ablation results:\n%s", frame.to_string(index=False))


def run_plot(sections: Dict[str, Any], run_config: RunConfig) -> None:
    plot_args = sections["plot"]
    if not plot_args.report_path:
        raise ConfigError("Nothing to plot: set plot.report_path (--report)")
    figures = plot_from_file(plot_args.report_path, run_config.output_dir, plot_args.image_format)
    LOG.info("Wrote %d figure(s) to %s", len(figures), run_config.output_dir)


COMMAND_RUNNERS: Dict[str, Callable[[Dict[str, Any], RunConfig], None]] = {
    "generate": run_generate,
    "train": run_train,
    "eval": run_eval,
    "sweep": run_sweep,
    "ablate": run_ablate,
    "plot": run_plot,
}


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, (FileNotFoundError, DatasetError)):
        return EXIT_DATA
    if isinstance(error, (LightFieldShapeError, ColorSpaceError)):
        return EXIT_SHAPE
    if isinstance(error, NonFiniteLossError):
        return EXIT_NON_FINITE
    return EXIT_UNKNOWN


def format_error(code: int, error: BaseException) -> str:
    message = " ".join(str(error).split())
    return f"lfdfnet-error code={code} type={type(error).__name__} message={message}"


def run(argv: Optional[Sequence[str]] = None) -> None:
    namespace = build_parser().parse_args(argv)
    run_config = RunConfig(
        command=namespace.command,
        config_path=namespace.config_path,
        overrides=list(namespace.overrides),
        seed=namespace.seed,
        output_dir=namespace.output_dir or str(Path(DEFAULT_OUTPUT_ROOT) / namespace.command),
    )
    config = load_config_file(run_config.config_path) if run_config.config_path else {}
    config = apply_overrides(config, run_config.overrides)
    config = _merge(config, _flag_overrides(run_config.command, namespace))
    sections = parse_sections(config, COMMAND_SECTIONS[run_config.command])
    if run_config.seed is None and "training" in sections:
        run_config.seed = sections["training"].seed
    if run_config.command == "train":
        sections["training"].output_dir = run_config.output_dir

    output_dir = create_folder_if_not_exist(run_config.output_dir)
    run_info = {"command": run_config.command, "output_dir": str(output_dir), "seed": run_config.seed}
    write_json(effective_config(sections, run_info), output_dir / EFFECTIVE_CONFIG_FILE)
    LOG.info("Running %s, effective config written to %s", run_config.command, output_dir / EFFECTIVE_CONFIG_FILE)

    COMMAND_RUNNERS[run_config.command](sections, run_config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    add_console_logging()
    try:
        run(argv)
    except SystemExit as e:
        # --help
        return EXIT_OK if e.code in (None, 0) else EXIT_CONFIG
    except Exception as e:  # noqa: BLE001
        code = exit_code_for(e)
        LOG.error("The %s command failed", argv, exc_info=e)
        print(format_error(code, e), file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
