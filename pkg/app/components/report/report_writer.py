import os

from app.utils.export import write_json

SECTION_TITLES = {
    "m1_vanishes": "First-order Melnikov function",
    "m2_positive": "Second-order Melnikov function",
    "displacement_positive": "Measured displacement",
    "expansion_fit": "Displacement expansion fit",
    "randomized_checks": "Randomized closed-form checks",
    "m1": "First-order Melnikov function (harness)",
}


def _format_value(value):
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        return f"{value:.9g}"
    if isinstance(value, (list, tuple)):
        if len(value) > 6:
            return f"[{', '.join(_format_value(v) for v in value[:6])}, ...] ({len(value)} values)"
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return str(value)


def render_text(report):
    """Plain-text rendering of a ConjectureReport."""
    lines = [
        f"System: {report.system_label} ({report.kind})",
        f"Annulus: r in [{report.r_range[0]:g}, {report.r_range[1]:g}]",
        f"eps values: {', '.join(f'{e:g}' for e in report.epsilons) or 'none'}",
        "",
        f"Verdict: {report.verdict}",
        f"Predicted limit cycles: {report.predicted_cycles}",
        "",
    ]
    for key, evidence in report.evidence.items():
        lines.append(SECTION_TITLES.get(key, key))
        for name, value in evidence.items():
            lines.append(f"  {name}: {_format_value(value)}")
        lines.append("")

    if report.root_reports:
        lines.append("Root searches")
        for roots in report.root_reports:
            found = ", ".join(f"{root.location:.9g} ({root.multiplicity})" for root in roots.roots) or "none"
            lines.append(f"  {roots.function_label}: {found}")
            for note in roots.notes:
                lines.append(f"    note: {note}")
        lines.append("")

    if report.failures:
        lines.append("Failures")
        lines.extend(f"  - {failure}" for failure in report.failures)
        lines.append("")

    lines.append("Caveats")
    lines.extend(f"  - {caveat}" for caveat in report.caveats)
    return "\n".join(lines) + "\n"


def write_report(report, output_dir):
    """Write report.json and report.txt; returns (success, message)."""
    json_path = os.path.join(output_dir, "report.json")
    success, message = write_json(report.to_dict(), json_path)
    if not success:
        return success, message
    text_path = os.path.join(output_dir, "report.txt")
    try:
        with open(text_path, 'w') as f:
            f.write(render_text(report))
    except Exception as e:
        return False, f"Error writing {text_path}: {str(e)}"
    return True, f"Wrote {json_path} and {text_path}"
