"""`graph`: build scene graphs from manifests."""

import argparse
import logging
import re
from pathlib import Path

from ..config import CliConfig
from ..services.manifest import read_manifest
from ..services.semantics import EdgePolicy, build_scene_graph, load_lexicon, load_region_map, write_scene_graph
from . import GRAPH_SUFFIX, open_output

logger = logging.getLogger(__name__)

NAME = "graph"
HELP = "scene manifest -> scene graph"
DESCRIPTION = """\
Build a scene graph (instances, direction edges, semantic triples) per manifest.

Lexicon: JSON object {"<label>": {"category": str, "synonyms": [str], "usages": [str]}},
  looked up by category label first, then class label.
Regions: JSON list [{"name": str, "x": [lo, hi], "y": [lo, hi]}]; first match wins,
  otherwise the quadrant of the scene box ("northwest area", ...).
Output: a directory receiving <city>__<scene_id>.graph.json files, or a .json file
  when a single manifest is given.
"""


def register(subparsers, common: argparse.ArgumentParser) -> None:
    """Add the subcommand parser."""
    p = subparsers.add_parser(
        NAME, help=HELP, description=DESCRIPTION, parents=[common], formatter_class=argparse.RawDescriptionHelpFormatter
    )
    p.add_argument("inputs", type=Path, nargs="+", help="scene manifest files")
    p.add_argument("--lexicon", type=Path, help="lexicon JSON")
    p.add_argument("--regions", type=Path, help="region map JSON")
    p.add_argument("--edge-policy", choices=["all_pairs", "k_nearest"], help="default all_pairs")
    p.add_argument("--edge-k", type=int, help="neighbors per instance under k_nearest (default 8)")
    p.add_argument("--front-bearing", type=float, help="bearing of 'front' in degrees from +x (default 90)")
    p.add_argument("-o", "--output", type=Path, required=True, help="output directory or .json file")


def graph_filename(city: str, scene_id: str) -> str:
    """File name of a scene graph, safe for any city or scene id."""
    safe = re.compile(r"[^A-Za-z0-9_.-]+")
    return f"{safe.sub('_', city)}__{safe.sub('_', scene_id)}{GRAPH_SUFFIX}"


def run(args: argparse.Namespace, config: CliConfig) -> int:
    """Run the subcommand."""
    lexicon = load_lexicon(config.lexicon) if config.lexicon else None
    regions = load_region_map(config.regions) if config.regions else None
    policy = EdgePolicy(mode=config.edge_policy, k=config.edge_k)

    single_file = len(config.inputs) == 1 and config.output.suffix == ".json"
    for path in config.inputs:
        with open(path, encoding="utf-8") as f:
            manifest = read_manifest(f)
        graph = build_scene_graph(manifest, lexicon, regions, policy, config.front_bearing)
        target = config.output if single_file else config.output / graph_filename(graph.city, graph.scene_id)
        with open_output(target) as sink:
            write_scene_graph(graph, sink)
        logger.info("%s: %d instances, %d edges", target, len(graph.instances), len(graph.spatial_edges))
    return 0
