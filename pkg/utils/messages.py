"""
Console messages printed by the command handlers.
"""

from typing import Any, Dict

MESSAGES: Dict[str, str] = {
    # Dataset
    "synth_done": "🧪 Synthetic set written to [bold]{path}[/bold] ({subjects} subjects, bin {bin})",
    "synth_cross_done": "🧪 Cross-bin set written to [bold]{path}[/bold] ({subjects} subjects, bin {bin})",
    "split_done": "✂️ Split written to [bold]{path}[/bold]: train={train} dev={dev} test={test}",
    "stats_title": "📒 {bin}: subjects per partition",

    # Pairs & morphs
    "pairs_done": "🤝 {count} pairs written to [bold]{path}[/bold] (threshold {tau})",
    "pairs_empty": "⚠️ No pair reached the pairing threshold; nothing to morph.",
    "morphs_done": "🎭 {count} morphs rendered into [bold]{path}[/bold]",
    "item_failures": "⚠️ {count} item(s) skipped; see the log for details.",

    # Vulnerability
    "calibrate_done": "🎯 tau = {tau} from {n} impostor scores (FAR target {far})",
    "calibrate_sentinel": "⚠️ No observed score met the FAR target; tau is a sentinel above the maximum.",
    "vuln_scores_done": "📊 {count} score rows written to [bold]{path}[/bold]",
    "vuln_report_title": "📊 Vulnerability at tau = {tau} ({comparator})",

    # MAD
    "features_done": "🧩 {count} {extractor} feature vectors written to [bold]{path}[/bold]",
    "model_done": "🧠 {extractor} model written to [bold]{path}[/bold] (train accuracy {accuracy:.2f}%)",
    "eval_title": "🎚️ {extractor}: D-EER {eer:.2f}% ({mode})",

    # Reports
    "svg_done": "🖼️ Figure written to [bold]{path}[/bold]",
    "table_done": "📗 Results table written to [bold]{path}[/bold]",

    # Experiment
    "experiment_start": "🚀 Experiment ({mode}) on {manifest} -> {out}",
    "experiment_done": "🏁 Experiment finished in {seconds:.1f}s; results in [bold]{path}[/bold]",

    # Errors
    "error_contract": "❌ {error}",
    "error_unexpected": "❌ Unexpected error: {error}",
}


def get_text(key: str, **kwargs: Any) -> str:
    """
    Get a console message by key.

    Args:
        key: Message key
        **kwargs: Format arguments

    Returns:
        Formatted message, or the key itself when unknown
    """
    text = MESSAGES.get(key, key)
    if kwargs:
        try:
            return text.format(**kwargs)
        except KeyError:
            return text
    return text
