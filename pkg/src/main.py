import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import pandas as pd
from dotenv import load_dotenv

# Add the project root directory to Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(project_root)

# Load the env variables (if available)
load_dotenv(os.path.join(project_root, '.env'))

from src.config.settings import Settings
from src.core.audit import audit_albums, audit_dataset, audit_user, findings_to_dict
from src.core.categorize import (
    TreeConfig,
    apply_labels,
    export_tree,
    label_dataset,
    load_labels,
    predict_category,
    train_decision_tree,
    training_accuracy,
    tree_from_dict,
    tree_to_dict,
)
from src.core.errors import InvalidInputError, IngestError, PrivacyAdvisorError
from src.core.evaluation import five_by_two_cv, load_reference
from src.core.ingest import (
    Dataset,
    NormalizationDictionary,
    dataset_to_dict,
    missing_value_stats,
    parse_combined_json,
    parse_profiles,
    privacy_totals,
    top_interests,
    write_csv,
)
from src.core.profile_model import AlbumPrivacyValue, DisclosureAttribute
from src.core.recommend import (
    DistanceConfig,
    DistanceMode,
    Policy,
    recommend_album_settings,
    recommend_all,
    render_album_advice,
    render_recommendations,
    suggest_category,
)
from src.core.synth import PlantedSignal, SynthConfig, generate_population
from src.utils.logger import get_logger

logger = get_logger(__name__)

FORMATS = ('text', 'json')


def _seed(value: str) -> int:
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {value!r}")
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {value}")
    return seed


def _positive(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count {value!r}")
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help='Settings file (default: config/config.<env>.json)')
    common.add_argument('--format', choices=FORMATS, default='text', help='Output format')
    common.add_argument('--out', type=Path, help='Write output to this path instead of stdout')

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument('--profiles', type=Path, help='profiles.csv')
    data.add_argument('--interests', type=Path, help='interests.csv')
    data.add_argument('--albums', type=Path, help='albums.csv')
    data.add_argument('--dataset', type=Path, help='Combined JSON dataset (instead of the three CSVs)')
    data.add_argument('--dict', type=Path, help='Normalization dictionary JSON')
    data.add_argument('--reference-year', type=int, help='Year ages are computed against')

    knn = argparse.ArgumentParser(add_help=False)
    knn.add_argument('--k', type=_positive, help='Number of neighbours')
    knn.add_argument('--mode', choices=[m.value for m in DistanceMode], help='Distance mode')

    parser = argparse.ArgumentParser(prog='privacyadvisor',
                                     description='Photo album privacy audit and disclosure advice')
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    audit_parser = subparsers.add_parser('audit', parents=[common, data], help='Report weakly protected albums')
    audit_parser.add_argument('--user', help='Audit only this user')

    subparsers.add_parser('label', parents=[common, data], help='Assign rule-based privacy categories')

    tree_parser = subparsers.add_parser('tree', help='Train, show or apply a decision tree')
    tree_sub = tree_parser.add_subparsers(dest='tree_command', metavar='action')
    tree_sub.required = True
    train_parser = tree_sub.add_parser('train', parents=[common, data], help='Train a tree')
    train_parser.add_argument('--labels', type=Path, help='External labels CSV (user_id,privacy_category)')
    train_parser.add_argument('--tree', type=Path, help='Save the trained tree as JSON')
    train_parser.add_argument('--max-depth', type=_positive)
    train_parser.add_argument('--min-leaf', type=_positive)
    show_parser = tree_sub.add_parser('show', parents=[common], help='Print a saved tree')
    show_parser.add_argument('--tree', type=Path, required=True)
    predict_parser = tree_sub.add_parser('predict', parents=[common, data], help='Apply a saved tree')
    predict_parser.add_argument('--tree', type=Path, required=True)
    predict_parser.add_argument('--user', help='Predict only this user')

    recommend_parser = subparsers.add_parser('recommend', parents=[common, data, knn],
                                             help='Advise which attributes to hide')
    recommend_parser.add_argument('--user', required=True)
    recommend_parser.add_argument('--policy', choices=[p.value for p in Policy])
    recommend_parser.add_argument('--attribute', action='append', help='Restrict to this attribute (repeatable)')
    recommend_parser.add_argument('--labels', type=Path, help='External labels for the category suggestion')

    evaluate_parser = subparsers.add_parser('evaluate', parents=[common, data, knn],
                                            help='5x2 cross-validation of disclosure prediction')
    evaluate_parser.add_argument('--target', required=True)
    evaluate_parser.add_argument('--seed', type=_seed, required=True)
    evaluate_parser.add_argument('--workers', type=_positive)

    synth_parser = subparsers.add_parser('synth', parents=[common], help='Generate a synthetic population')
    synth_parser.add_argument('--seed', type=_seed, required=True)
    synth_parser.add_argument('--n-users', type=_positive)
    synth_parser.add_argument('--synth-config', type=Path, help='Generator config JSON')
    synth_parser.add_argument('--plant-target', help='Attribute whose presence is planted')
    synth_parser.add_argument('--plant-inputs', help='Comma-separated attributes the planted presence depends on')
    synth_parser.add_argument('--plant-function', default='majority', help='majority, all, any or parity')

    stats_parser = subparsers.add_parser('stats', parents=[common, data], help='Dataset summary tables')
    stats_parser.add_argument('--top', type=_positive, help='Number of interests listed')

    return parser


def _settings(args) -> Settings:
    settings = Settings()
    if args.config:
        settings.load_settings(str(args.config.resolve()))
    return settings


def _dictionary(args, settings: Settings) -> NormalizationDictionary:
    path = args.dict or settings.path('dictionary_file')
    if path is None:
        return NormalizationDictionary()
    return NormalizationDictionary.load(path)


def _load_dataset(args, settings: Settings) -> Dataset:
    dictionary = _dictionary(args, settings)
    if args.dataset:
        return parse_combined_json(args.dataset, dictionary, args.reference_year)
    if not (args.profiles and args.interests and args.albums):
        raise InvalidInputError("Pass --dataset or all of --profiles, --interests and --albums")
    year = args.reference_year if args.reference_year is not None else settings.get('reference_year')
    return parse_profiles(args.profiles, args.interests, args.albums, dictionary, year)


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)
    logger.info(f"Wrote {out}")


def _distance_config(args, settings: Settings) -> DistanceConfig:
    section = settings.section('recommender')
    if getattr(args, 'mode', None):
        section['mode'] = args.mode
    return DistanceConfig.from_settings(section)


def _k(args, settings: Settings) -> int:
    return args.k or int(settings.section('recommender').get('k', 3))


def cmd_audit(args, settings: Settings) -> str:
    d = _load_dataset(args, settings)
    users = [d.by_id(args.user)] if args.user else list(d)
    if args.format == 'json':
        if args.user:
            v = users[0]
            return _dump(findings_to_dict(audit_albums(v.albums), v.user_id, v.profile.name or v.user_id))
        return _dump(audit_dataset(users))
    return "\n".join(audit_user(v) for v in users)


def cmd_label(args, settings: Settings) -> str:
    d = _load_dataset(args, settings)
    records = []
    for lu in label_dataset(d):
        s = lu.vector.album_summary
        records.append({
            'user_id': lu.vector.user_id,
            'total': s.total,
            'n_everyone': s.n_everyone,
            'n_fof': s.n_fof,
            'n_networks': s.n_networks,
            'n_friends': s.n_friends,
            'n_custom': s.n_custom,
            'rule_label': lu.category.value,
        })
    if args.format == 'json':
        return _dump(records)
    columns = ['user_id', 'total', 'n_everyone', 'n_fof', 'n_networks', 'n_friends', 'n_custom', 'rule_label']
    return pd.DataFrame(records, columns=columns).to_csv(index=False, lineterminator='\n')


def _tree_config(args, settings: Settings) -> TreeConfig:
    section = settings.section('tree')
    if args.max_depth is not None:
        section['max_depth'] = args.max_depth
    if args.min_leaf is not None:
        section['min_leaf'] = args.min_leaf
    return TreeConfig.from_settings(section)


def _read_tree(path: Path):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return tree_from_dict(json.load(f))
    except FileNotFoundError:
        raise IngestError(f"File not found: {path}", {"file": str(path)})
    except json.JSONDecodeError as e:
        raise IngestError(f"Invalid tree JSON: {e.msg}", {"file": str(path), "line": e.lineno})


def cmd_tree(args, settings: Settings) -> str:
    if args.tree_command == 'show':
        tree = _read_tree(args.tree)
        return _dump(tree_to_dict(tree)) if args.format == 'json' else export_tree(tree)

    d = _load_dataset(args, settings)
    if args.tree_command == 'predict':
        tree = _read_tree(args.tree)
        users = [d.by_id(args.user)] if args.user else list(d)
        predictions = [(v.user_id, predict_category(tree, v).value) for v in users]
        if args.format == 'json':
            return _dump([{'user_id': uid, 'privacy_category': c} for uid, c in predictions])
        return "".join(f"{uid}\t{c}\n" for uid, c in predictions)

    labeled = apply_labels(d, load_labels(args.labels)) if args.labels else label_dataset(d)
    tree = train_decision_tree(labeled, _tree_config(args, settings), d.metadata.reference_year)
    accuracy = training_accuracy(tree, labeled)
    document = tree_to_dict(tree)
    if args.tree:
        _emit(_dump(document), args.tree)
    if args.format == 'json':
        return _dump({'training_accuracy': accuracy, 'users': len(labeled), 'tree': document})
    return (export_tree(tree)
            + f"\nTrained on {len(labeled)} users, training accuracy {accuracy * 100:.2f}%\n")


def cmd_recommend(args, settings: Settings) -> str:
    d = _load_dataset(args, settings)
    section = settings.section('recommender')
    k = _k(args, settings)
    policy = Policy(args.policy or section.get('policy', Policy.MAJORITY.value))
    cfg = _distance_config(args, settings)
    names = args.attribute or section.get('attributes', [a.value for a in DisclosureAttribute])
    attributes = [DisclosureAttribute.parse(a) for a in names]

    query = d.by_id(args.user)
    recommendations = recommend_all(query, d, k, policy, cfg, attributes)

    labeled = apply_labels(d, load_labels(args.labels)) if args.labels else label_dataset(d)
    category = None
    if len([lu for lu in labeled if lu.vector.user_id != query.user_id]) >= k:
        category, _ = suggest_category(query, labeled, k, cfg)
    album_advice = recommend_album_settings(query, d, k, cfg)

    if args.format == 'json':
        return _dump({
            'user_id': query.user_id,
            'k': k,
            'policy': policy.value,
            'mode': cfg.mode.value,
            'suggested_category': category.value if category else None,
            'recommendations': [r.to_dict() for r in recommendations],
            'album_advice': album_advice.to_dict(),
        })
    return (render_recommendations(query, recommendations, k, policy, cfg.mode, category)
            + render_album_advice(album_advice))


def cmd_evaluate(args, settings: Settings) -> str:
    d = _load_dataset(args, settings)
    target = DisclosureAttribute.parse(args.target)
    workers = args.workers or int(settings.section('evaluation').get('workers', 1))
    result = five_by_two_cv(d, target, _k(args, settings), _distance_config(args, settings), args.seed, workers)
    if args.format == 'json':
        return result.to_json() + "\n"
    reference = None
    reference_file = settings.path('reference_cv_file')
    if reference_file is not None and reference_file.exists():
        reference = load_reference(reference_file).get(target)
    return result.render(reference)


def cmd_synth(args, settings: Settings) -> str:
    config_file = args.synth_config or settings.path('synth_config_file')
    cfg = SynthConfig.load(config_file) if config_file else SynthConfig()
    planted = None
    if args.plant_target:
        if not args.plant_inputs:
            raise InvalidInputError("--plant-target needs --plant-inputs")
        planted = PlantedSignal.from_dict({
            'target': args.plant_target,
            'inputs': [a for a in args.plant_inputs.split(',') if a.strip()],
            'function': args.plant_function,
        })
    cfg = cfg.with_overrides(seed=args.seed, n_users=args.n_users, planted_signal=planted)
    d = generate_population(cfg)

    if args.format == 'json':
        return _dump(dataset_to_dict(d))
    # CSV output is a directory of three files; the summary line goes to stdout
    out_dir, args.out = args.out, None
    if out_dir is None:
        raise InvalidInputError("CSV output needs --out <directory>")
    write_csv(d, out_dir / 'profiles.csv', out_dir / 'interests.csv', out_dir / 'albums.csv')
    return f"Wrote {len(d)} users to {out_dir}\n"


def cmd_stats(args, settings: Settings) -> str:
    d = _load_dataset(args, settings)
    top = args.top or int(settings.section('stats').get('top_interests', 10))
    missing = missing_value_stats(d)
    ranking = top_interests(d, top)
    totals = privacy_totals(d)
    if args.format == 'json':
        return _dump({
            'missing': missing.to_dict(),
            'top_interests': ranking.to_dict(),
            'album_privacy_totals': {p.value: totals.count(p) for p in AlbumPrivacyValue},
        })
    lines = [missing.render(), "", ranking.render(), "", f"Photo albums by visibility (n={totals.total})"]
    lines += [f"{p.value:<20}{totals.count(p)}" for p in AlbumPrivacyValue]
    return "\n".join(lines) + "\n"


COMMANDS = {
    'audit': cmd_audit,
    'label': cmd_label,
    'tree': cmd_tree,
    'recommend': cmd_recommend,
    'evaluate': cmd_evaluate,
    'synth': cmd_synth,
    'stats': cmd_stats,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        settings = _settings(args)
        output = COMMANDS[args.command](args, settings)
        _emit(output, args.out)
    except PrivacyAdvisorError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
