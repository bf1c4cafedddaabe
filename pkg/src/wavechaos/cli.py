"""Command-line entry point.

    wavechaos preprocess --config cfg.json
    wavechaos chaos-sim --out traj.csv --duration 100
    wavechaos enhance ...
    wavechaos train ...
    wavechaos evaluate ...
    wavechaos ablate ...

Every subcommand takes --config (JSON) and repeated --set key=value
overrides; flags win over the file. WAVECHAOS_WORKDIR overrides the
configured working directory.
"""

import argparse
import sys

from . import pipeline
from .errors import WavechaosError
from .pipeline import PipelineConfig


def _build_parser():
    parser = argparse.ArgumentParser(prog="wavechaos", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config field (repeatable; JSON values accepted)",
        )

    common(sub.add_parser("preprocess", help="resize, normalize, augment"))
    chaos = sub.add_parser("chaos-sim", help="export a chaotic trajectory CSV")
    common(chaos)
    chaos.add_argument("--out", default="trajectory.csv")
    chaos.add_argument("--duration", type=float, default=100.0, help="time units")
    chaos.add_argument("--step", type=float, default=None)
    chaos.add_argument("--burn-in", type=int, default=None)
    common(sub.add_parser("enhance", help="apply chaotic wavelet enhancement"))
    common(sub.add_parser("train", help="train the classifier"))
    common(sub.add_parser("evaluate", help="score a trained checkpoint"))
    common(sub.add_parser("ablate", help="paired chaos vs no-chaos comparison"))
    return parser


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    config.apply_overrides(args.overrides)
    config.validate()
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "preprocess":
            path = pipeline.cmd_preprocess(config)
            print(f"wrote {path}")
        elif args.command == "chaos-sim":
            if args.step is not None and not (0.0 < args.step <= 0.1):
                raise WavechaosError(f"step must be in (0, 0.1], got {args.step}")
            path = pipeline.cmd_chaos_sim(
                config, args.out, duration=args.duration, step=args.step,
                burn_in=args.burn_in,
            )
            print(f"wrote {path}")
        elif args.command == "enhance":
            path = pipeline.cmd_enhance(config)
            print(f"wrote {path}")
        elif args.command == "train":
            ckpt, curves = pipeline.cmd_train(config)
            print(f"wrote {ckpt}")
            print(f"wrote {curves}")
        elif args.command == "evaluate":
            path = pipeline.cmd_evaluate(config)
            print(f"wrote {path}")
        elif args.command == "ablate":
            path = pipeline.cmd_ablate(config)
            print(f"wrote {path}")
    except WavechaosError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
