"""`generate`: template QA pairs from scene graphs, optionally paraphrased."""

import argparse
import logging
from pathlib import Path

from ..config import CliConfig
from ..exceptions import ConfigurationError
from ..services.dataset import (
    DEFAULT_PARAPHRASE_PROMPT,
    GenerationConfig,
    dedup_pairs,
    generate_dataset,
    paraphrase_pairs,
    write_dataset,
)
from ..services.llm import ChatCompletionClient
from ..services.oracle import OracleParams
from . import load_graphs, load_template_registry, open_output, show_progress

logger = logging.getLogger(__name__)

NAME = "generate"
HELP = "scene graphs -> QA line records"
DESCRIPTION = """\
Instantiate every registered template over every scene graph and answer it with
the symbolic oracle. Output is one JSON object per line:
  {qid, city, scene_id, category, hops, question, answer: {kind, value},
   provenance: {template_id, binding, oracle_params, semantics, original_question},
   paraphrased}
Records are ordered by (city, scene_id, template id, binding); the same inputs,
flags and --seed always produce the same file.

Templates: optional JSON list of {id, category, hops, pattern, operation} added
behind the built-in registry (built-in ids win).

With --paraphrase, each question is reworded through a chat-completion endpoint
(--llm-endpoint, key from CITY3DQA_LLM_KEY). Rewordings that drop an entity or
state another answer are rejected; failed requests keep the template question
and make the command exit with status 3.
"""


def register(subparsers, common: argparse.ArgumentParser) -> None:
    """Add the subcommand parser."""
    p = subparsers.add_parser(
        NAME, help=HELP, description=DESCRIPTION, parents=[common], formatter_class=argparse.RawDescriptionHelpFormatter
    )
    p.add_argument("inputs", type=Path, nargs="+", help="scene graph files or directories of *.graph.json")
    p.add_argument("--templates", type=Path, help="extra template JSON file")
    p.add_argument("--per-template-limit", type=int, help="bindings per template and scene (default 20)")
    p.add_argument("--synonym-probability", type=float, help="chance of naming an instance by a synonym (default 0.3)")
    p.add_argument("--near-radius", type=float, help="radius of 'near' in meters (default 100)")
    p.add_argument("--tie-tolerance", type=float, help="distance tie tolerance in meters (default 1e-9)")
    p.add_argument("--no-dedup", action="store_true", help="keep repeated (question, answer, scene) records")
    p.add_argument("--paraphrase", action="store_true", help="reword questions through the LLM endpoint")
    p.add_argument("--prompt", type=Path, help="prompt file with [template], [answer] and [graph] placeholders")
    p.add_argument("--llm-endpoint", help="chat-completions URL")
    p.add_argument("--llm-model", help="model name")
    p.add_argument("--llm-temperature", type=float, help="sampling temperature")
    p.add_argument("--llm-timeout", type=float, help="request timeout in seconds")
    p.add_argument("--llm-max-in-flight", type=int, help="concurrent requests (default 4)")
    p.add_argument("-o", "--output", type=Path, help="dataset path (default: standard output)")


def run(args: argparse.Namespace, config: CliConfig) -> int:
    """Run the subcommand."""
    registry = load_template_registry(args.templates)
    graphs = load_graphs(config.inputs)
    if not graphs:
        raise ConfigurationError("no scene graphs found in the given inputs")

    gen_config = GenerationConfig(
        seed=config.seed,
        per_template_limit=config.per_template_limit,
        synonym_probability=config.synonym_probability,
        oracle=OracleParams(near_radius=config.near_radius, tie_tolerance=config.tie_tolerance),
    )
    progress = show_progress(args)
    pairs = generate_dataset(graphs.values(), registry, gen_config, jobs=config.jobs, progress=progress)
    if not args.no_dedup:
        before = len(pairs)
        pairs = dedup_pairs(pairs)
        if len(pairs) < before:
            logger.info("dropped %d repeated records", before - len(pairs))

    status = 0
    if args.paraphrase:
        if not config.llm_endpoint:
            raise ConfigurationError("--paraphrase needs --llm-endpoint or CITY3DQA_LLM_ENDPOINT")
        prompt = args.prompt.read_text(encoding="utf-8") if args.prompt else DEFAULT_PARAPHRASE_PROMPT
        client = ChatCompletionClient(
            config.llm_endpoint,
            model=config.llm_model,
            temperature=config.llm_temperature,
            timeout=config.llm_timeout,
            api_key=config.llm_key,
        )
        result = paraphrase_pairs(
            pairs, client, graphs, prompt, config.llm_max_in_flight, registry=registry, progress=progress
        )
        pairs = list(result.pairs)
        logger.info("paraphrase: %d accepted, %d rejected, %d failed", result.accepted, result.rejected, result.failed)
        if result.failed:
            status = 3

    with open_output(config.output) as sink:
        write_dataset(pairs, sink)
    logger.info("wrote %d pairs from %d scenes", len(pairs), len(graphs))
    return status
