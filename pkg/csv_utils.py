"""CSV helpers shared by every command that writes a report.

All files use ``,`` separators, ``.`` decimals and LF line endings, and start
with a ``# config_hash=<h> seed=<n>`` preamble when one is given.
"""

import csv
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

PREAMBLE_PREFIX = "# "


def format_preamble(config_hash: str, seed: int) -> str:
    """The ``config_hash=<h> seed=<n>`` line written at the top of every CSV."""
    return f"config_hash={config_hash} seed={seed}"


def format_value(value) -> str:
    """Floats are written with ``repr`` so they read back bit-exact."""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def write_csv(path: Union[str, Path], fieldnames: Sequence[str], rows: Iterable[Dict],
              preamble: Optional[str] = None):
    """Write rows under an optional ``#`` preamble line."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        if preamble:
            handle.write(f"{PREAMBLE_PREFIX}{preamble}\n")
        writer = csv.DictWriter(handle, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: format_value(row[key]) for key in fieldnames})


def read_csv(path: Union[str, Path]) -> Tuple[Optional[str], List[Dict[str, str]]]:
    """Return ``(preamble, rows)``; the preamble is ``None`` when absent."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"CSV file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    preamble = None
    if lines and lines[0].startswith(PREAMBLE_PREFIX):
        preamble = lines[0][len(PREAMBLE_PREFIX):]
        lines = lines[1:]
    return preamble, list(csv.DictReader(lines))


def parse_preamble(preamble: Optional[str]) -> Dict[str, str]:
    """Split a preamble into its ``key=value`` pairs."""
    if not preamble:
        return {}
    pairs = (item.split("=", 1) for item in preamble.split() if "=" in item)
    return {key: value for key, value in pairs}
