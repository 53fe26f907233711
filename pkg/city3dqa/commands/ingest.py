"""`ingest`: stream a labeled point file into a scene manifest."""

import argparse
from pathlib import Path

from ..config import CliConfig
from ..services.manifest import ingest_scene, load_category_overrides, load_class_map, write_manifest
from ..services.semantics import category_defaults, load_lexicon
from . import open_output, show_progress

NAME = "ingest"
HELP = "points -> scene manifest"
DESCRIPTION = """\
Stream a labeled point cloud in one pass and write its scene manifest (JSON).

Point formats:
  XYZCI  text, one "x y z class_id instance_id" record per line, '#' comments
  C3PC   binary, magic "C3PC\\0\\0\\0\\1" then little-endian 3 x float64 + 2 x uint32 records
Class map: JSON object {"<class_id>": "<class label>"}.
Overrides: JSON object {"<instance_id>": "<category label>"}.
"""


def register(subparsers, common: argparse.ArgumentParser) -> None:
    """Add the subcommand parser."""
    p = subparsers.add_parser(
        NAME, help=HELP, description=DESCRIPTION, parents=[common], formatter_class=argparse.RawDescriptionHelpFormatter
    )
    p.add_argument("points", type=Path, help="point file (XYZCI or C3PC)")
    p.add_argument("--class-map", type=Path, required=True, help="class id -> class label JSON")
    p.add_argument("--city", required=True, help="city the scene belongs to")
    p.add_argument("--scene-id", help="scene id (default: point file stem)")
    p.add_argument("--lexicon", type=Path, help="lexicon JSON; its categories become default category labels")
    p.add_argument("--overrides", type=Path, help="per-instance category overrides JSON")
    p.add_argument("--format", dest="point_format", choices=["auto", "xyzci", "c3pc"], default="auto")
    p.add_argument("--chunk-records", type=int, help="records per chunk (default 262144)")
    p.add_argument("-o", "--output", type=Path, help="manifest path (default: standard output)")


def run(args: argparse.Namespace, config: CliConfig) -> int:
    """Run the subcommand."""
    lexicon = load_lexicon(config.lexicon) if config.lexicon else None
    manifest = ingest_scene(
        args.points,
        city=args.city,
        scene_id=args.scene_id or args.points.name.split(".")[0],
        class_map=load_class_map(args.class_map),
        categories=category_defaults(lexicon),
        overrides=load_category_overrides(args.overrides) if args.overrides else None,
        fmt=args.point_format,
        jobs=config.jobs,
        chunk_records=config.chunk_records,
        progress=show_progress(args),
    )
    with open_output(config.output) as sink:
        write_manifest(manifest, sink)
    return 0
